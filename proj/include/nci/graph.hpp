#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace nci {

/// Immutable node/edge/attribute/label store with dense indexing.
/// External ids are strings; internal indices follow first-seen order.
/// Safe for unrestricted concurrent reads once loaded.
class Graph {
 public:
  Graph() = default;

  int node_count() const { return static_cast<int>(node_ids_.size()); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::string& node_id(int index) const { return node_ids_.at(static_cast<std::size_t>(index)); }
  int index_of(const std::string& id) const;        // -1 when unknown
  int require_index(const std::string& id) const;   // reference error when unknown

  // Sorted neighbor list; no self entries, no duplicates.
  const std::vector<int>& neighbors(int u) const { return adjacency_.at(static_cast<std::size_t>(u)); }
  int degree(int u) const { return static_cast<int>(neighbors(u).size()); }
  int max_degree() const;
  bool has_edge(int u, int v) const;

  // Undirected edge list with u < v.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool has_attributes() const { return attributes_.has_value(); }
  const Eigen::MatrixXd& attributes() const;

  bool has_labels() const { return labels_.has_value(); }
  const std::vector<int>& labels() const;
  int class_count() const { return class_count_; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  // One-hot |V| x C label matrix.
  Eigen::MatrixXd label_matrix() const;

  // FNV-1a over node ids, edges, attributes, and labels; used to key
  // similarity cache files to the exact graph content.
  std::uint64_t content_hash() const;

  static Graph build(std::vector<std::string> node_ids, std::vector<std::pair<int, int>> edges);
  void attach_attributes(Eigen::MatrixXd attributes);
  void attach_labels(std::vector<int> labels, std::vector<std::string> class_names);

 private:
  std::vector<std::string> node_ids_;
  std::unordered_map<std::string, int> id_to_index_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<std::pair<int, int>> edges_;
  std::optional<Eigen::MatrixXd> attributes_;
  std::optional<std::vector<int>> labels_;
  int class_count_ = 0;
  std::vector<std::string> class_names_;
};

/// Loads a graph from an edge list plus optional attribute/label tables.
///
/// Edge list: one edge per line, two whitespace- or comma-separated tokens;
/// a single-token line declares an isolated node; `#` starts a comment line.
/// Attributes: CSV with header `node,f1,...,fD`, one row per node.
/// Labels: CSV with header `node,label`; label tokens become class indices
/// in first-seen order.
///
/// Directed input is symmetrized (edge kept if either direction is present);
/// duplicates collapse; self-loops are rejected.
Graph load_graph(const std::string& edge_path,
                 const std::optional<std::string>& attr_path,
                 const std::optional<std::string>& label_path,
                 bool directed_input = false);

/// Writes the documented formats back to disk; loading them reproduces the
/// same edge set, attribute matrix, and label vector.
void save_graph(const Graph& g, const std::string& edge_path,
                const std::optional<std::string>& attr_path,
                const std::optional<std::string>& label_path);

/// D̃^(−1/2) Ã D̃^(−1/2) with Ã = A + I. Symmetric, entries in [0, 1],
/// eigenvalues in [−1, 1].
Eigen::MatrixXd normalized_adjacency_with_self_loops(const Graph& g);

/// Ordered, distinct node indices with a role tag.
struct NodeSet {
  enum class Role { Query, Target };

  Role role = Role::Target;
  std::vector<int> indices;

  static NodeSet all(const Graph& g, Role role);
  // fraction < 1 subsamples deterministically from the seed; at least one
  // node is always kept.
  static NodeSet query_sample(const Graph& g, double fraction, std::uint64_t seed);
};

}  // namespace nci
