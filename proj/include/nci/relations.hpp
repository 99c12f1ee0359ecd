#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nci/graph.hpp"

namespace nci {

enum class RelationKind { Link, Spd, PageRank, DegreeDist, LabelDist, Attr, AttrDist };

const char* to_string(RelationKind kind);
RelationKind relation_kind_from_string(const std::string& token);

/// One of the seven node relations plus its knobs (hop count k for the
/// distribution relations, damping alpha for personalized PageRank).
struct RelationSpec {
  RelationKind kind = RelationKind::Link;
  int k = 1;
  double alpha = 0.85;

  std::string name() const;
  bool symmetric() const { return kind != RelationKind::PageRank; }
  bool needs_attributes() const { return kind == RelationKind::Attr || kind == RelationKind::AttrDist; }
  bool needs_labels() const { return kind == RelationKind::LabelDist; }
  void validate(const Graph& g) const;
};

/// Pairwise similarity values S_r in [0, 1]. Dense for SPD/PageRank and the
/// distribution relations, row-sparse for Link. The diagonal is defined as
/// 1 for every relation; coherence scoring never compares a node to itself.
///
/// A matrix may be restricted to a row block (the query rows coherence
/// scoring reads); unpopulated rows refuse access and restricted matrices
/// refuse densification.
class SimilarityMatrix {
 public:
  using SparseRow = std::vector<std::pair<int, double>>;  // sorted by column

  static SimilarityMatrix dense(RelationSpec spec, Eigen::MatrixXd values);
  static SimilarityMatrix sparse(RelationSpec spec, int n, std::vector<SparseRow> rows);
  /// Row block: only `rows` (sorted node indices) are populated.
  static SimilarityMatrix restricted(RelationSpec spec, int n, std::vector<int> rows,
                                     std::vector<SparseRow> row_values);

  int size() const { return n_; }
  const RelationSpec& spec() const { return spec_; }
  bool symmetric() const { return spec_.symmetric(); }
  bool is_sparse() const { return std::holds_alternative<std::vector<SparseRow>>(storage_); }
  bool is_restricted() const { return !populated_.empty(); }
  bool row_populated(int u) const;

  double value(int u, int v) const;

  /// Strictly positive entries of row u excluding the diagonal, sorted by
  /// column. Thresholding and band construction operate on these.
  SparseRow positive_row(int u) const;

  Eigen::MatrixXd to_dense() const;

  double min_stored() const;
  double max_stored() const;
  double zero_fraction() const;  // fraction of off-diagonal zeros
  std::uint64_t content_hash() const;

 private:
  RelationSpec spec_;
  int n_ = 0;
  std::variant<Eigen::MatrixXd, std::vector<SparseRow>> storage_;
  std::vector<bool> populated_;  // empty means every row
};

/// Dispatches to the per-relation kernel. Deterministic; results cacheable.
SimilarityMatrix compute_similarity(const Graph& g, const RelationSpec& spec);

/// Computes only the given rows of S_r (sorted node indices); values equal
/// the corresponding rows of the full matrix. Memory stays proportional to
/// the block, which is all coherence scoring needs on large graphs.
SimilarityMatrix compute_similarity_rows(const Graph& g, const RelationSpec& spec,
                                         const std::vector<int>& rows);

/// BFS distances from every node; kUnreachable marks disconnected pairs.
struct ShortestPaths {
  static constexpr int kUnreachable = -1;
  Eigen::MatrixXi distance;
  int diameter = 0;  // max finite distance
};
ShortestPaths all_pairs_shortest_path(const Graph& g);

/// Solves pi = alpha * P * pi + (1 - alpha) * e_source by power iteration;
/// P is the column-stochastic transition matrix (uniform over neighbors,
/// dangling columns teleport to the source). Converges when the successive
/// L1 difference drops below 1e-10, capped at 1000 iterations.
Eigen::VectorXd personalized_pagerank(const Graph& g, int source, double alpha);

/// A^k * features via k rounds of sparse propagation, then L1 row
/// normalization; all-zero rows stay zero.
Eigen::MatrixXd khop_feature_distribution(const Graph& g, const Eigen::MatrixXd& features, int k);

/// Histogram over degrees 1..max_degree of the node's exactly-k-hop
/// neighbors, normalized to sum 1 when nonempty.
Eigen::VectorXd degree_distribution_vector(const Graph& g, int node, int k);

/// Text cache format: header `relation,kind,k,alpha,n`, then `u,v,value`
/// triples for nonzero entries. Round-trips values exactly.
void save_similarity(const SimilarityMatrix& s, const std::string& path);
SimilarityMatrix load_similarity(const std::string& path);

}  // namespace nci
