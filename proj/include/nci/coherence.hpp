#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nci/embedding.hpp"
#include "nci/relations.hpp"
#include "nci/rng.hpp"

#include <nlohmann/json.hpp>

namespace nci {

struct CoherenceParams {
  double c = 1.64;                   // margin multiplier
  double eta_s_percentile = 70.0;    // similar-node threshold percentile
  double eta_i_percentile = 5.0;     // intruder threshold percentile
  int pairs_per_query = 3;           // K sampled (similar, intruder) pairs
  int k_bands = 3;                   // smoothness band count
  double query_fraction = 1.0;       // fraction of nodes used as queries
  int n_null_shuffles = 100;         // permutations for the smoothness bound
  std::uint64_t seed = 0;
  std::size_t distance_sample = 100000;  // pair sample for sigma estimation
  std::size_t pair_sample = 100000;      // pair sample for the Kendall baseline

  void validate() const;
  nlohmann::json to_json() const;
  static CoherenceParams from_json(const nlohmann::json& j);
};

/// Outcome of one empirical rate: the rate itself plus skip accounting so
/// that relations with many skipped queries are visibly less reliable.
struct RateResult {
  double rate = 0.0;
  int usable_queries = 0;
  int total_queries = 0;
  long pairs_used = 0;
  std::map<std::string, int> skip_reasons;

  double usable_fraction() const {
    return total_queries == 0 ? 0.0 : static_cast<double>(usable_queries) / total_queries;
  }
};

/// Empirical probability that a sampled (similar, intruder) pair is split by
/// the margin c * sigma_{D_f} in embedding distance. Queries whose similar
/// or intruder set is empty are skipped and reported; throws a degenerate
/// error when every query is skipped.
RateResult clustering_coherence_rate(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                                     const CoherenceParams& p);

/// Cantelli bound 2 / (2 + c^2) on the clustering rate under the null.
double clustering_null_bound(double c);

/// Ordered band sample for one query: thresholds interpolate from eta_s up
/// to 1, one node drawn per half-open band [eta_i, eta_{i-1}). Returns
/// nothing when any band is empty (the query is skipped).
std::optional<std::vector<int>> build_similar_bands(const SimilarityMatrix& s, int query,
                                                    double eta_s, const CoherenceParams& p,
                                                    Rng& rng);

/// Fraction of usable queries whose banded nodes are ordered by strictly
/// increasing embedding distance (distance ties count as violations).
RateResult smoothness_coherence_rate(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                                     const CoherenceParams& p);

/// Empirical 95th percentile of the smoothness rate over shuffled copies of
/// the embedding (seeds seed+1 .. seed+n).
double smoothness_null_bound(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                             const CoherenceParams& p);

/// Aggregate coherence rate: the mean of the two component rates.
double coherence_rate(double clustering, double smoothness);

/// Simplex-weighted sum of per-relation coherence rates. Uniform weights
/// when none are given; weights must sum to 1 within 1e-9 over exactly the
/// rates' relation set.
double model_coherence_score(const std::map<std::string, double>& rates,
                             const std::optional<std::map<std::string, double>>& weights = std::nullopt);

/// Per-relation entry of a CoherenceReport. A component with zero usable
/// queries is marked unusable; the aggregate averages the usable components
/// and significance requires every usable rate to exceed its bound.
struct RelationCoherence {
  std::string name;
  double clustering_rate = 0.0;
  double clustering_bound = 0.0;
  bool clustering_usable = false;
  double smoothness_rate = 0.0;
  double smoothness_bound = 0.0;
  bool smoothness_usable = false;
  double aggregate = 0.0;
  bool significant = false;
  double usable_query_fraction = 0.0;
  std::map<std::string, int> skip_reasons;
};

struct CoherenceReport {
  std::string model;
  CoherenceParams params;
  std::vector<RelationCoherence> relations;
  double model_score = 0.0;
  int zero_rows = 0;

  nlohmann::json to_json() const;
};

/// Scores one embedding against every relation: both rates, both null
/// bounds, the aggregate, and the model coherence score.
CoherenceReport interpret_embedding(const std::string& model_name, const EmbeddingMatrix& z,
                                    const std::vector<const SimilarityMatrix*>& relations,
                                    const CoherenceParams& p,
                                    const std::optional<std::map<std::string, double>>& weights = std::nullopt);

/// NCI interpretation score used by the IME harness: the mean over the
/// usable component rates; degenerate when neither component has a usable
/// query.
double nci_score(const EmbeddingMatrix& z, const SimilarityMatrix& s, const CoherenceParams& p);

/// Whether each component has at least one usable query for this relation.
/// Depends only on the similarity structure, not on any embedding.
struct ComponentUsability {
  bool clustering = false;
  bool smoothness = false;
  bool any() const { return clustering || smoothness; }
};
ComponentUsability component_usability(const SimilarityMatrix& s, const CoherenceParams& p);

/// The query node set V_h: all n nodes, or a seeded subsample when
/// query_fraction < 1. Sorted; shared by every scorer.
std::vector<int> coherence_query_set(int n, const CoherenceParams& p);

}  // namespace nci
