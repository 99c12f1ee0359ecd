#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nci/coherence.hpp"
#include "nci/embedding.hpp"
#include "nci/graph.hpp"
#include "nci/relations.hpp"

namespace nci {

enum class Method { Nci, KendallTau, PropertyClass };

const char* to_string(Method m);
Method method_from_string(const std::string& token);

/// Interpretation scoring function Gamma_m(Z, G, r) for the configured
/// method. The embedding is row-normalized internally when needed.
double interpretation_score(Method method, const EmbeddingMatrix& z, const SimilarityMatrix& s,
                            const CoherenceParams& p);

/// Write-once-read-many similarity store. With a disk directory set,
/// entries round-trip through the documented text cache keyed by graph
/// content hash.
class SimilarityCache {
 public:
  explicit SimilarityCache(const Graph& g, std::optional<std::string> disk_dir = std::nullopt);

  const SimilarityMatrix& get(const RelationSpec& spec);
  bool last_was_disk_hit(const std::string& name) const;
  std::string disk_path(const RelationSpec& spec) const;

 private:
  const Graph* graph_;
  std::optional<std::string> disk_dir_;
  std::map<std::string, std::unique_ptr<SimilarityMatrix>> entries_;
  std::map<std::string, bool> disk_hits_;
  mutable std::mutex mutex_;
};

struct ImeTargetResult {
  std::string target;
  std::map<std::string, double> scores;  // relation name -> kappa
  int rank = 1;                          // 1 + |{kappa_j > kappa_target}|
  int tied = 0;                          // |{kappa_j == kappa_target, j != target}|
  double clamp_fraction = 0.0;           // negative-eigenvalue mass of S_target
};

struct ImeResult {
  Method method = Method::Nci;
  int d = 0;
  double expressiveness = 0.0;  // d / |V|
  std::vector<ImeTargetResult> per_target;
  double mrr = 0.0;
  std::uint64_t seed = 0;
  CoherenceParams params;                       // resolved snapshot
  std::vector<std::string> excluded_relations;  // no usable coherence query

  nlohmann::json to_json() const;
};

/// Algorithm: for each target relation, factor its symmetrized similarity
/// matrix into a d-dimensional embedding, score every relation with the
/// method, and rank the target among the scores (ties resolve in the
/// target's favor but are reported). MRR averages the reciprocal ranks.
ImeResult run_ime(const Graph& g, const std::vector<RelationSpec>& relations, int d, Method method,
                  const CoherenceParams& p, SimilarityCache* cache = nullptr);

/// Runs run_ime per (dimension, method) while reusing one similarity matrix
/// and one full eigendecomposition per relation across all sweep points.
std::vector<ImeResult> expressiveness_sweep(const Graph& g, const std::vector<RelationSpec>& relations,
                                            const std::vector<int>& dims,
                                            const std::vector<Method>& methods,
                                            const CoherenceParams& p, SimilarityCache* cache = nullptr);

double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

}  // namespace nci
