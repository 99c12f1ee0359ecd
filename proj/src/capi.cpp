#include "nci.h"

#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "nci/coherence.hpp"
#include "nci/embedding.hpp"
#include "nci/error.hpp"
#include "nci/graph.hpp"
#include "nci/ime.hpp"
#include "nci/relations.hpp"
#include "nci/runner.hpp"

struct nci_graph {
  nci::Graph impl;
};
struct nci_similarity {
  nci::SimilarityMatrix impl;
};
struct nci_embedding {
  nci::EmbeddingMatrix impl;
};

namespace {

thread_local std::string g_last_error;

nci_status status_for(nci::ErrorKind kind) {
  using nci::ErrorKind;
  switch (kind) {
    case ErrorKind::Io: return NCI_E_IO;
    case ErrorKind::Parse: return NCI_E_PARSE;
    case ErrorKind::Validation: return NCI_E_VALIDATION;
    case ErrorKind::Reference: return NCI_E_REFERENCE;
    case ErrorKind::Parameter: return NCI_E_PARAMETER;
    case ErrorKind::Capability: return NCI_E_CAPABILITY;
    case ErrorKind::Constraint: return NCI_E_CONSTRAINT;
    case ErrorKind::Degenerate: return NCI_E_DEGENERATE;
    case ErrorKind::Numerical: return NCI_E_NUMERICAL;
    case ErrorKind::InsufficientData: return NCI_E_INSUFFICIENT_DATA;
    case ErrorKind::UndefinedCorrelation: return NCI_E_UNDEFINED_CORRELATION;
    case ErrorKind::Internal: return NCI_E_INTERNAL;
  }
  return NCI_E_INTERNAL;
}

template <typename Fn>
nci_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NCI_OK;
  } catch (const nci::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return NCI_E_PARSE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NCI_E_INTERNAL;
  }
}

char* copy_string(const std::string& text) {
  char* out = new char[text.size() + 1];
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

std::vector<nci::RelationSpec> parse_relations(const char* relations_json) {
  const nlohmann::json j = nlohmann::json::parse(relations_json);
  std::vector<nci::RelationSpec> specs;
  for (const auto& r : j) {
    nci::RelationSpec spec;
    spec.kind = nci::relation_kind_from_string(r.at("kind").get<std::string>());
    if (r.contains("k")) spec.k = r.at("k").get<int>();
    if (r.contains("alpha")) spec.alpha = r.at("alpha").get<double>();
    specs.push_back(spec);
  }
  return specs;
}

nci::CoherenceParams parse_params(const char* params_json) {
  if (params_json == nullptr || params_json[0] == '\0') return nci::CoherenceParams{};
  return nci::CoherenceParams::from_json(nlohmann::json::parse(params_json));
}

template <typename Command>
nci_status run_command(const char* config_json, const char* base_dir, char** summary_json_out,
                       Command&& command) {
  return guarded([&] {
    if (config_json == nullptr) nci::fail(nci::ErrorKind::Parameter, "config_json is null");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      nci::fail(nci::ErrorKind::Parse, std::string("config is not valid JSON: ") + e.what());
    }
    const nci::RunConfig config =
        nci::RunConfig::from_json(doc, base_dir == nullptr ? "" : base_dir);
    const nci::CommandResult result = command(config);
    if (summary_json_out != nullptr) *summary_json_out = copy_string(result.summary.dump(2));
  });
}

}  // namespace

extern "C" {

const char* nci_last_error(void) { return g_last_error.c_str(); }

int nci_exit_code(nci_status status) {
  switch (status) {
    case NCI_OK: return 0;
    case NCI_E_DEGENERATE:
    case NCI_E_NUMERICAL:
    case NCI_E_UNDEFINED_CORRELATION:
    case NCI_E_INTERNAL:
      return 1;
    default:
      return 2;
  }
}

void nci_string_free(char* text) { delete[] text; }

nci_status nci_graph_load(const char* edge_path, const char* attr_path_or_null,
                          const char* label_path_or_null, int directed_input, nci_graph** out) {
  return guarded([&] {
    if (edge_path == nullptr || out == nullptr) {
      nci::fail(nci::ErrorKind::Parameter, "edge_path and out must not be null");
    }
    std::optional<std::string> attrs;
    std::optional<std::string> labels;
    if (attr_path_or_null != nullptr) attrs = attr_path_or_null;
    if (label_path_or_null != nullptr) labels = label_path_or_null;
    *out = new nci_graph{nci::load_graph(edge_path, attrs, labels, directed_input != 0)};
  });
}

void nci_graph_free(nci_graph* g) { delete g; }

int64_t nci_graph_nodes(const nci_graph* g) { return g == nullptr ? 0 : g->impl.node_count(); }

int64_t nci_graph_edges(const nci_graph* g) {
  return g == nullptr ? 0 : static_cast<int64_t>(g->impl.edge_count());
}

nci_status nci_graph_node_id(const nci_graph* g, int64_t index, char** out) {
  return guarded([&] {
    if (g == nullptr || out == nullptr) nci::fail(nci::ErrorKind::Parameter, "null argument");
    if (index < 0 || index >= g->impl.node_count()) {
      nci::fail(nci::ErrorKind::Parameter, "node index out of range");
    }
    *out = copy_string(g->impl.node_id(static_cast<int>(index)));
  });
}

nci_status nci_similarity_compute(const nci_graph* g, const char* kind, int k, double alpha,
                                  nci_similarity** out) {
  return guarded([&] {
    if (g == nullptr || kind == nullptr || out == nullptr) {
      nci::fail(nci::ErrorKind::Parameter, "null argument");
    }
    nci::RelationSpec spec;
    spec.kind = nci::relation_kind_from_string(kind);
    spec.k = k > 0 ? k : 1;
    spec.alpha = alpha > 0.0 && alpha < 1.0 ? alpha : 0.85;
    *out = new nci_similarity{nci::compute_similarity(g->impl, spec)};
  });
}

void nci_similarity_free(nci_similarity* s) { delete s; }

double nci_similarity_value(const nci_similarity* s, int64_t u, int64_t v) {
  if (s == nullptr || u < 0 || v < 0 || u >= s->impl.size() || v >= s->impl.size()) return -1.0;
  return s->impl.value(static_cast<int>(u), static_cast<int>(v));
}

nci_status nci_similarity_save(const nci_similarity* s, const char* path) {
  return guarded([&] {
    if (s == nullptr || path == nullptr) nci::fail(nci::ErrorKind::Parameter, "null argument");
    nci::save_similarity(s->impl, path);
  });
}

nci_status nci_similarity_load(const char* path, nci_similarity** out) {
  return guarded([&] {
    if (path == nullptr || out == nullptr) nci::fail(nci::ErrorKind::Parameter, "null argument");
    *out = new nci_similarity{nci::load_similarity(path)};
  });
}

nci_status nci_embedding_load(const nci_graph* g, const char* path, nci_embedding** out) {
  return guarded([&] {
    if (g == nullptr || path == nullptr || out == nullptr) {
      nci::fail(nci::ErrorKind::Parameter, "null argument");
    }
    *out = new nci_embedding{nci::load_embedding(g->impl, path)};
  });
}

nci_status nci_embedding_save(const nci_embedding* z, const nci_graph* g, const char* path) {
  return guarded([&] {
    if (z == nullptr || g == nullptr || path == nullptr) {
      nci::fail(nci::ErrorKind::Parameter, "null argument");
    }
    nci::save_embedding(z->impl, g->impl, path);
  });
}

nci_status nci_embedding_evd(const nci_similarity* s, int64_t dim, nci_embedding** out) {
  return guarded([&] {
    if (s == nullptr || out == nullptr) nci::fail(nci::ErrorKind::Parameter, "null argument");
    *out = new nci_embedding{nci::generate_evd_embedding(s->impl, static_cast<int>(dim))};
  });
}

nci_status nci_embedding_demo_rp(const nci_graph* g, int64_t dim, uint64_t seed, nci_embedding** out) {
  return guarded([&] {
    if (g == nullptr || out == nullptr) nci::fail(nci::ErrorKind::Parameter, "null argument");
    *out = new nci_embedding{nci::demo_rp_embedding(g->impl, static_cast<int>(dim), seed)};
  });
}

nci_status nci_embedding_shuffle(const nci_embedding* z, uint64_t seed, nci_embedding** out) {
  return guarded([&] {
    if (z == nullptr || out == nullptr) nci::fail(nci::ErrorKind::Parameter, "null argument");
    *out = new nci_embedding{nci::shuffle_embedding(z->impl, seed)};
  });
}

void nci_embedding_free(nci_embedding* z) { delete z; }

int64_t nci_embedding_rows(const nci_embedding* z) { return z == nullptr ? 0 : z->impl.rows(); }

int64_t nci_embedding_dim(const nci_embedding* z) { return z == nullptr ? 0 : z->impl.dim(); }

nci_status nci_interpret(const nci_graph* g, const nci_embedding* z, const char* model_name,
                         const char* relations_json, const char* params_json,
                         char** report_json_out) {
  return guarded([&] {
    if (g == nullptr || z == nullptr || relations_json == nullptr || report_json_out == nullptr) {
      nci::fail(nci::ErrorKind::Parameter, "null argument");
    }
    const auto specs = parse_relations(relations_json);
    const nci::CoherenceParams params = parse_params(params_json);

    std::vector<nci::SimilarityMatrix> matrices;
    matrices.reserve(specs.size());
    for (const auto& spec : specs) matrices.push_back(nci::compute_similarity(g->impl, spec));
    std::vector<const nci::SimilarityMatrix*> pointers;
    pointers.reserve(matrices.size());
    for (const auto& m : matrices) pointers.push_back(&m);

    const nci::CoherenceReport report = nci::interpret_embedding(
        model_name == nullptr ? "embedding" : model_name, z->impl, pointers, params);
    *report_json_out = copy_string(report.to_json().dump(2));
  });
}

nci_status nci_evaluate_method(const nci_graph* g, const char* method, const char* relations_json,
                               const char* params_json, int64_t dim, char** result_json_out) {
  return guarded([&] {
    if (g == nullptr || method == nullptr || relations_json == nullptr || result_json_out == nullptr) {
      nci::fail(nci::ErrorKind::Parameter, "null argument");
    }
    const auto specs = parse_relations(relations_json);
    const nci::CoherenceParams params = parse_params(params_json);
    const int d = dim > 0 ? static_cast<int>(dim) : g->impl.node_count();
    const nci::ImeResult result =
        nci::run_ime(g->impl, specs, d, nci::method_from_string(method), params);
    *result_json_out = copy_string(result.to_json().dump(2));
  });
}

nci_status nci_pearson(const double* xs, const double* ys, int64_t n, double* out) {
  return guarded([&] {
    if (xs == nullptr || ys == nullptr || out == nullptr || n < 0) {
      nci::fail(nci::ErrorKind::Parameter, "null argument");
    }
    *out = nci::pearson_correlation(std::span<const double>(xs, static_cast<std::size_t>(n)),
                                    std::span<const double>(ys, static_cast<std::size_t>(n)));
  });
}

nci_status nci_run_relations(const char* config_json, const char* base_dir, char** summary_json_out) {
  return run_command(config_json, base_dir, summary_json_out,
                     [](const nci::RunConfig& c) { return nci::cmd_relations(c); });
}

nci_status nci_run_interpret(const char* config_json, const char* base_dir, char** summary_json_out) {
  return run_command(config_json, base_dir, summary_json_out,
                     [](const nci::RunConfig& c) { return nci::cmd_interpret(c); });
}

nci_status nci_run_evaluate_method(const char* config_json, const char* base_dir,
                                   char** summary_json_out) {
  return run_command(config_json, base_dir, summary_json_out,
                     [](const nci::RunConfig& c) { return nci::cmd_evaluate_method(c); });
}

nci_status nci_run_correlate(const char* config_json, const char* base_dir, const char* metrics_path,
                             char** summary_json_out) {
  return run_command(config_json, base_dir, summary_json_out, [&](const nci::RunConfig& c) {
    if (metrics_path == nullptr) nci::fail(nci::ErrorKind::Parameter, "metrics_path is null");
    return nci::cmd_correlate(c, metrics_path);
  });
}

}  // extern "C"
