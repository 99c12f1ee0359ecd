#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "nci/graph.hpp"
#include "nci/relations.hpp"

namespace nci {

/// |V| x d real matrix Z with provenance metadata. Immutable by convention:
/// operations return fresh copies, the raw matrix is never mutated in place.
struct EmbeddingMatrix {
  Eigen::MatrixXd values;
  bool normalized = false;
  std::string source;          // file:<name> | evd:<relation>,d=<d> | shuffle:<seed> | demo-rp:<seed>
  int zero_row_count = 0;      // rows left at zero by normalize_rows
  double clamp_fraction = 0.0; // sum |negative eigenvalues| / sum |eigenvalues| for EVD sources

  int rows() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

/// Full eigendecomposition of a symmetrized similarity matrix, eigenvalues
/// descending and negatives clamped to zero. Truncating the same basis at
/// different dimensions yields every sweep point from one decomposition.
struct SpectralBasis {
  Eigen::MatrixXd vectors;   // columns ordered by descending eigenvalue
  Eigen::VectorXd values;    // clamped, descending
  double clamp_fraction = 0.0;
  std::string relation;
  int size() const { return static_cast<int>(values.size()); }
};

SpectralBasis eigendecompose_similarity(const SimilarityMatrix& s);
EmbeddingMatrix embedding_from_basis(const SpectralBasis& basis, int d);

/// Z = U[:, :d] * diag(sqrt(lambda[:d])) from the eigendecomposition of the
/// symmetrized S. Per-column sign is fixed by forcing the largest-magnitude
/// eigenvector entry positive.
EmbeddingMatrix generate_evd_embedding(const SimilarityMatrix& s, int d);

double pairwise_distance(const EmbeddingMatrix& z, int u, int v);

/// Nonzero rows scaled to unit L2 norm; zero rows kept and counted.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& z);

/// Rows permuted by a seeded uniform permutation; the multiset of rows and
/// hence the pairwise-distance distribution are preserved exactly.
EmbeddingMatrix shuffle_embedding(const EmbeddingMatrix& z, std::uint64_t seed);

/// Standard deviation of the pairwise-distance distribution, exact over all
/// unordered pairs when |V| <= exhaustive_limit, otherwise estimated from
/// sample_size distinct pairs drawn with the seed.
double distance_std(const EmbeddingMatrix& z, std::size_t sample_size, std::uint64_t seed,
                    std::size_t exhaustive_limit = 2000);

/// Demo generator: seeded sparse sign projection R (+1/-1 each with
/// probability 1/6), Z = sum_k w_k N^k R over k = 1..3 with w = (1, 1, 0.5)
/// and N the self-loop-normalized adjacency, rows L2-normalized.
EmbeddingMatrix demo_rp_embedding(const Graph& g, int d, std::uint64_t seed);

/// CSV with header `node,e1,...,ed`; the node column must cover exactly the
/// graph's node ids. Values round-trip to full double precision.
EmbeddingMatrix load_embedding(const Graph& g, const std::string& path);
void save_embedding(const EmbeddingMatrix& z, const Graph& g, const std::string& path);

}  // namespace nci
