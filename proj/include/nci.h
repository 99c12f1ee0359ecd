/* C interface to the node-coherence interpretation library.
 *
 * All functions return nci_status; nci_last_error() describes the most
 * recent failure on the calling thread. Objects returned through out
 * parameters are owned by the caller and released with the matching
 * *_free function; strings are released with nci_string_free.
 */
#ifndef NCI_H
#define NCI_H

#include <stdint.h>

#if defined(_WIN32)
#define NCI_API __declspec(dllexport)
#else
#define NCI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nci_status {
  NCI_OK = 0,
  NCI_E_IO = 1,
  NCI_E_PARSE = 2,
  NCI_E_VALIDATION = 3,
  NCI_E_REFERENCE = 4,
  NCI_E_PARAMETER = 5,
  NCI_E_CAPABILITY = 6,
  NCI_E_CONSTRAINT = 7,
  NCI_E_DEGENERATE = 8,
  NCI_E_NUMERICAL = 9,
  NCI_E_INSUFFICIENT_DATA = 10,
  NCI_E_UNDEFINED_CORRELATION = 11,
  NCI_E_INTERNAL = 12
} nci_status;

typedef struct nci_graph nci_graph;
typedef struct nci_similarity nci_similarity;
typedef struct nci_embedding nci_embedding;

/* Message for the last failure on this thread; empty string when none. */
NCI_API const char* nci_last_error(void);

/* Process exit code for a status: 0 ok, 1 internal/numerical, 2 user/config. */
NCI_API int nci_exit_code(nci_status status);

NCI_API void nci_string_free(char* text);

/* ---- graphs ---------------------------------------------------------- */

NCI_API nci_status nci_graph_load(const char* edge_path, const char* attr_path_or_null,
                                  const char* label_path_or_null, int directed_input,
                                  nci_graph** out);
NCI_API void nci_graph_free(nci_graph* g);
NCI_API int64_t nci_graph_nodes(const nci_graph* g);
NCI_API int64_t nci_graph_edges(const nci_graph* g);
NCI_API nci_status nci_graph_node_id(const nci_graph* g, int64_t index, char** out);

/* ---- similarity matrices --------------------------------------------- */

/* kind: link | spd | pagerank | degree_dist | label_dist | attr | attr_dist */
NCI_API nci_status nci_similarity_compute(const nci_graph* g, const char* kind, int k, double alpha,
                                          nci_similarity** out);
NCI_API void nci_similarity_free(nci_similarity* s);
/* Similarity in [0, 1]; -1.0 when the handle is null or an index is out of
 * range. */
NCI_API double nci_similarity_value(const nci_similarity* s, int64_t u, int64_t v);
NCI_API nci_status nci_similarity_save(const nci_similarity* s, const char* path);
NCI_API nci_status nci_similarity_load(const char* path, nci_similarity** out);

/* ---- embeddings ------------------------------------------------------- */

NCI_API nci_status nci_embedding_load(const nci_graph* g, const char* path, nci_embedding** out);
NCI_API nci_status nci_embedding_save(const nci_embedding* z, const nci_graph* g, const char* path);
NCI_API nci_status nci_embedding_evd(const nci_similarity* s, int64_t dim, nci_embedding** out);
NCI_API nci_status nci_embedding_demo_rp(const nci_graph* g, int64_t dim, uint64_t seed,
                                         nci_embedding** out);
NCI_API nci_status nci_embedding_shuffle(const nci_embedding* z, uint64_t seed, nci_embedding** out);
NCI_API void nci_embedding_free(nci_embedding* z);
NCI_API int64_t nci_embedding_rows(const nci_embedding* z);
NCI_API int64_t nci_embedding_dim(const nci_embedding* z);

/* ---- scoring ----------------------------------------------------------
 *
 * relations_json: array like [{"kind":"spd"},{"kind":"pagerank","alpha":0.85}]
 * params_json: object of coherence parameters; missing keys take defaults.
 */

NCI_API nci_status nci_interpret(const nci_graph* g, const nci_embedding* z, const char* model_name,
                                 const char* relations_json, const char* params_json,
                                 char** report_json_out);

/* method: nci | kendall_tau | property_class; dim <= |V| (0 means |V|). */
NCI_API nci_status nci_evaluate_method(const nci_graph* g, const char* method,
                                       const char* relations_json, const char* params_json,
                                       int64_t dim, char** result_json_out);

NCI_API nci_status nci_pearson(const double* xs, const double* ys, int64_t n, double* out);

/* ---- config-driven commands -------------------------------------------
 *
 * config_json is the full run config document (the CLI's file format);
 * base_dir resolves its relative paths. Outputs are written to the config's
 * out_dir; the returned summary mirrors the summary file.
 */

NCI_API nci_status nci_run_relations(const char* config_json, const char* base_dir,
                                     char** summary_json_out);
NCI_API nci_status nci_run_interpret(const char* config_json, const char* base_dir,
                                     char** summary_json_out);
NCI_API nci_status nci_run_evaluate_method(const char* config_json, const char* base_dir,
                                           char** summary_json_out);
NCI_API nci_status nci_run_correlate(const char* config_json, const char* base_dir,
                                     const char* metrics_path, char** summary_json_out);

#ifdef __cplusplus
}
#endif

#endif /* NCI_H */
