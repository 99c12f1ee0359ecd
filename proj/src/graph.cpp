#include "nci/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nci/error.hpp"
#include "nci/rng.hpp"

namespace nci {

namespace {

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : line) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

double parse_real(const std::string& token, const std::string& path, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": expected a real value, got '" + token + "'");
  }
}

std::ifstream open_or_fail(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open file: " + path);
  return in;
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

int Graph::index_of(const std::string& id) const {
  auto it = id_to_index_.find(id);
  return it == id_to_index_.end() ? -1 : it->second;
}

int Graph::require_index(const std::string& id) const {
  const int idx = index_of(id);
  if (idx < 0) fail(ErrorKind::Reference, "unknown node id: " + id);
  return idx;
}

int Graph::max_degree() const {
  int best = 0;
  for (const auto& row : adjacency_) best = std::max(best, static_cast<int>(row.size()));
  return best;
}

bool Graph::has_edge(int u, int v) const {
  const auto& row = neighbors(u);
  return std::binary_search(row.begin(), row.end(), v);
}

const Eigen::MatrixXd& Graph::attributes() const {
  if (!attributes_) fail(ErrorKind::Capability, "graph has no node attributes");
  return *attributes_;
}

const std::vector<int>& Graph::labels() const {
  if (!labels_) fail(ErrorKind::Capability, "graph has no node labels");
  return *labels_;
}

Eigen::MatrixXd Graph::label_matrix() const {
  const auto& y = labels();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(node_count(), class_count_);
  for (int u = 0; u < node_count(); ++u) m(u, y[static_cast<std::size_t>(u)]) = 1.0;
  return m;
}

std::uint64_t Graph::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& id : node_ids_) {
    hash_bytes(h, id.data(), id.size());
    hash_bytes(h, "\x1f", 1);
  }
  for (const auto& [u, v] : edges_) {
    hash_bytes(h, &u, sizeof(u));
    hash_bytes(h, &v, sizeof(v));
  }
  if (attributes_) {
    hash_bytes(h, attributes_->data(), sizeof(double) * static_cast<std::size_t>(attributes_->size()));
  }
  if (labels_) {
    hash_bytes(h, labels_->data(), sizeof(int) * labels_->size());
  }
  return h;
}

Graph Graph::build(std::vector<std::string> node_ids, std::vector<std::pair<int, int>> edges) {
  Graph g;
  g.node_ids_ = std::move(node_ids);
  for (int i = 0; i < g.node_count(); ++i) {
    auto [it, inserted] = g.id_to_index_.emplace(g.node_ids_[static_cast<std::size_t>(i)], i);
    if (!inserted) fail(ErrorKind::Validation, "duplicate node id: " + g.node_ids_[static_cast<std::size_t>(i)]);
  }

  std::set<std::pair<int, int>> unique;
  for (auto [u, v] : edges) {
    if (u == v) fail(ErrorKind::Validation, "self-loop on node '" + g.node_id(u) + "' is not allowed");
    if (u < 0 || v < 0 || u >= g.node_count() || v >= g.node_count()) {
      fail(ErrorKind::Reference, "edge endpoint out of range");
    }
    unique.emplace(std::min(u, v), std::max(u, v));
  }

  g.edges_.assign(unique.begin(), unique.end());
  g.adjacency_.assign(static_cast<std::size_t>(g.node_count()), {});
  for (auto [u, v] : g.edges_) {
    g.adjacency_[static_cast<std::size_t>(u)].push_back(v);
    g.adjacency_[static_cast<std::size_t>(v)].push_back(u);
  }
  for (auto& row : g.adjacency_) std::sort(row.begin(), row.end());
  return g;
}

void Graph::attach_attributes(Eigen::MatrixXd attributes) {
  if (attributes.rows() != node_count()) {
    fail(ErrorKind::Validation, "attribute row count does not match node count");
  }
  attributes_ = std::move(attributes);
}

void Graph::attach_labels(std::vector<int> labels, std::vector<std::string> class_names) {
  if (static_cast<int>(labels.size()) != node_count()) {
    fail(ErrorKind::Validation, "label count does not match node count");
  }
  class_count_ = static_cast<int>(class_names.size());
  for (int y : labels) {
    if (y < 0 || y >= class_count_) fail(ErrorKind::Validation, "label index out of range");
  }
  labels_ = std::move(labels);
  class_names_ = std::move(class_names);
}

Graph load_graph(const std::string& edge_path,
                 const std::optional<std::string>& attr_path,
                 const std::optional<std::string>& label_path,
                 bool directed_input) {
  std::ifstream in = open_or_fail(edge_path);

  std::vector<std::string> node_ids;
  std::unordered_map<std::string, int> index_of;
  auto intern = [&](const std::string& id) {
    auto it = index_of.find(id);
    if (it != index_of.end()) return it->second;
    const int idx = static_cast<int>(node_ids.size());
    node_ids.push_back(id);
    index_of.emplace(id, idx);
    return idx;
  };

  std::vector<std::pair<int, int>> raw_edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') continue;
    const auto tokens = split_tokens(line);
    if (tokens.empty()) continue;
    if (tokens.size() == 1) {
      intern(tokens[0]);  // isolated node declaration
      continue;
    }
    if (tokens.size() != 2) {
      fail(ErrorKind::Parse, edge_path + ":" + std::to_string(line_no) +
                                 ": expected two tokens per edge, got " + std::to_string(tokens.size()));
    }
    const int u = intern(tokens[0]);
    const int v = intern(tokens[1]);
    if (u == v) {
      fail(ErrorKind::Validation,
           edge_path + ":" + std::to_string(line_no) + ": self-loop on node '" + tokens[0] + "'");
    }
    raw_edges.emplace_back(u, v);
  }
  (void)directed_input;  // either orientation produces the same undirected edge

  Graph g = Graph::build(std::move(node_ids), std::move(raw_edges));

  if (attr_path) {
    std::ifstream attr_in = open_or_fail(*attr_path);
    std::string header;
    if (!std::getline(attr_in, header)) fail(ErrorKind::Parse, *attr_path + ": empty attribute file");
    const auto columns = split_csv(header);
    if (columns.size() < 2 || columns[0] != "node") {
      fail(ErrorKind::Parse, *attr_path + ": expected header 'node,f1,...,fD'");
    }
    const int dim = static_cast<int>(columns.size()) - 1;
    Eigen::MatrixXd attrs = Eigen::MatrixXd::Zero(g.node_count(), dim);
    std::vector<bool> seen(static_cast<std::size_t>(g.node_count()), false);
    int row_no = 1;
    while (std::getline(attr_in, line)) {
      ++row_no;
      if (line.empty()) continue;
      const auto fields = split_csv(line);
      if (static_cast<int>(fields.size()) != dim + 1) {
        fail(ErrorKind::Parse, *attr_path + ":" + std::to_string(row_no) + ": ragged row");
      }
      const int u = g.index_of(fields[0]);
      if (u < 0) fail(ErrorKind::Reference, *attr_path + ": attribute row references unknown node '" + fields[0] + "'");
      if (seen[static_cast<std::size_t>(u)]) {
        fail(ErrorKind::Validation, *attr_path + ": duplicate attribute row for node '" + fields[0] + "'");
      }
      seen[static_cast<std::size_t>(u)] = true;
      for (int j = 0; j < dim; ++j) attrs(u, j) = parse_real(fields[static_cast<std::size_t>(j) + 1], *attr_path, row_no);
    }
    for (int u = 0; u < g.node_count(); ++u) {
      if (!seen[static_cast<std::size_t>(u)]) {
        fail(ErrorKind::Reference, *attr_path + ": missing attribute row for node '" + g.node_id(u) + "'");
      }
    }
    g.attach_attributes(std::move(attrs));
  }

  if (label_path) {
    std::ifstream label_in = open_or_fail(*label_path);
    std::string header;
    if (!std::getline(label_in, header)) fail(ErrorKind::Parse, *label_path + ": empty label file");
    const auto columns = split_csv(header);
    if (columns.size() != 2 || columns[0] != "node" || columns[1] != "label") {
      fail(ErrorKind::Parse, *label_path + ": expected header 'node,label'");
    }
    std::vector<int> labels(static_cast<std::size_t>(g.node_count()), -1);
    std::vector<std::string> class_names;
    std::unordered_map<std::string, int> class_index;
    int row_no = 1;
    while (std::getline(label_in, line)) {
      ++row_no;
      if (line.empty()) continue;
      const auto fields = split_csv(line);
      if (fields.size() != 2) fail(ErrorKind::Parse, *label_path + ":" + std::to_string(row_no) + ": ragged row");
      const int u = g.index_of(fields[0]);
      if (u < 0) fail(ErrorKind::Reference, *label_path + ": label row references unknown node '" + fields[0] + "'");
      if (labels[static_cast<std::size_t>(u)] >= 0) {
        fail(ErrorKind::Validation, *label_path + ": duplicate label row for node '" + fields[0] + "'");
      }
      auto [it, inserted] = class_index.emplace(fields[1], static_cast<int>(class_names.size()));
      if (inserted) class_names.push_back(fields[1]);
      labels[static_cast<std::size_t>(u)] = it->second;
    }
    for (int u = 0; u < g.node_count(); ++u) {
      if (labels[static_cast<std::size_t>(u)] < 0) {
        fail(ErrorKind::Reference, *label_path + ": missing label row for node '" + g.node_id(u) + "'");
      }
    }
    g.attach_labels(std::move(labels), std::move(class_names));
  }

  return g;
}

void save_graph(const Graph& g, const std::string& edge_path,
                const std::optional<std::string>& attr_path,
                const std::optional<std::string>& label_path) {
  {
    std::ofstream out(edge_path);
    if (!out) fail(ErrorKind::Io, "cannot write file: " + edge_path);
    // Leading single-token declarations pin the dense index order, so a
    // reload reproduces the exact node mapping (and covers isolated nodes).
    for (int u = 0; u < g.node_count(); ++u) out << g.node_id(u) << '\n';
    for (auto [u, v] : g.edges()) out << g.node_id(u) << ' ' << g.node_id(v) << '\n';
  }

  if (attr_path) {
    if (!g.has_attributes()) fail(ErrorKind::Capability, "graph has no attributes to save");
    std::ofstream out(*attr_path);
    if (!out) fail(ErrorKind::Io, "cannot write file: " + *attr_path);
    const auto& x = g.attributes();
    out << "node";
    for (int j = 0; j < x.cols(); ++j) out << ",f" << (j + 1);
    out << '\n';
    char buf[64];
    for (int u = 0; u < g.node_count(); ++u) {
      out << g.node_id(u);
      for (int j = 0; j < x.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", x(u, j));
        out << ',' << buf;
      }
      out << '\n';
    }
  }

  if (label_path) {
    if (!g.has_labels()) fail(ErrorKind::Capability, "graph has no labels to save");
    std::ofstream out(*label_path);
    if (!out) fail(ErrorKind::Io, "cannot write file: " + *label_path);
    out << "node,label\n";
    for (int u = 0; u < g.node_count(); ++u) {
      out << g.node_id(u) << ',' << g.class_names()[static_cast<std::size_t>(g.labels()[static_cast<std::size_t>(u)])]
          << '\n';
    }
  }
}

Eigen::MatrixXd normalized_adjacency_with_self_loops(const Graph& g) {
  const int n = g.node_count();
  Eigen::VectorXd inv_sqrt_degree(n);
  for (int u = 0; u < n; ++u) {
    inv_sqrt_degree(u) = 1.0 / std::sqrt(static_cast<double>(g.degree(u) + 1));
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int u = 0; u < n; ++u) {
    m(u, u) = inv_sqrt_degree(u) * inv_sqrt_degree(u);
    for (int v : g.neighbors(u)) m(u, v) = inv_sqrt_degree(u) * inv_sqrt_degree(v);
  }
  return m;
}

NodeSet NodeSet::all(const Graph& g, Role role) {
  NodeSet s;
  s.role = role;
  s.indices.resize(static_cast<std::size_t>(g.node_count()));
  for (int i = 0; i < g.node_count(); ++i) s.indices[static_cast<std::size_t>(i)] = i;
  return s;
}

NodeSet NodeSet::query_sample(const Graph& g, double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0) fail(ErrorKind::Parameter, "query_fraction must be in (0, 1]");
  NodeSet s = all(g, Role::Query);
  if (fraction >= 1.0) return s;
  const int keep = std::max(1, static_cast<int>(std::llround(fraction * g.node_count())));
  Rng rng = Rng::substream(seed, "query-sample");
  auto chosen = sample_without_replacement(g.node_count(), keep, rng);
  std::sort(chosen.begin(), chosen.end());
  s.indices = std::move(chosen);
  return s;
}

}  // namespace nci
