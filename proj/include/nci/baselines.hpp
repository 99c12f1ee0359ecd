#pragma once

#include <cstdint>
#include <span>

#include "nci/coherence.hpp"
#include "nci/embedding.hpp"
#include "nci/relations.hpp"

namespace nci {

/// Tie-aware Kendall tau-b between two value sequences. Massive tie groups
/// (e.g. mostly-zero Link similarities) make the tau-a variant degenerate,
/// so the tie-corrected form is used throughout. Errors only when both
/// sequences are constant; a single constant side scores 0.
double kendall_tau_b(std::span<const double> xs, std::span<const double> ys);

/// Rank-correlation interpretation score: tau-b between sampled pair
/// similarities s_r(u,v) and negated embedding distances. Pairs are
/// enumerated exhaustively whenever the pair universe fits in pair_sample
/// (unordered pairs for symmetric relations, ordered otherwise).
double kendall_tau_score(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                         std::size_t pair_sample, std::uint64_t seed);

/// Property-classification interpretation score: a regularized linear
/// classifier separates (query, similar) from (query, intruder) pairs on
/// features [|z_u - z_v| ; z_u * z_v]; returns held-out accuracy on an
/// 80/20 split of the balanced pair set.
double property_classification_score(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                                     const CoherenceParams& p);

/// Classifier knobs; the defaults keep the baseline deliberately linear and
/// weakly regularized.
struct PropertyClassOptions {
  double l2_penalty = 1e-2;
  double tolerance = 1e-6;
  int max_iterations = 10000;
  std::size_t max_pairs_per_class = 5000;
  double train_fraction = 0.8;
  std::size_t min_pairs_per_class = 20;
};

double property_classification_score(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                                     const CoherenceParams& p, const PropertyClassOptions& options);

}  // namespace nci
