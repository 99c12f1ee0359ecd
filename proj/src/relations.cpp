#include "nci/relations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>

#include "nci/error.hpp"
#include "nci/parallel.hpp"

namespace nci {

namespace {

constexpr double kValueEps = 1e-12;

double clamp01(double v) {
  if (v < 0.0) return 0.0;
  if (v > 1.0) return 1.0;
  return v;
}

Eigen::MatrixXd unit_rows(const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd unit = rows;
  for (int u = 0; u < unit.rows(); ++u) {
    const double norm = unit.row(u).norm();
    if (norm > 0.0) unit.row(u) /= norm;
  }
  return unit;
}

// Gram matrix of row vectors after L2 normalization; zero rows yield zero
// similarity. Negative cosines (mixed-sign inputs) clamp to 0. Entries come
// from per-pair dot products so full and row-restricted computations agree
// bit for bit.
Eigen::MatrixXd cosine_similarity_matrix(const Eigen::MatrixXd& rows) {
  const int n = static_cast<int>(rows.rows());
  const Eigen::MatrixXd unit = unit_rows(rows);
  Eigen::MatrixXd s(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t u) {
    const int i = static_cast<int>(u);
    for (int v = 0; v < n; ++v) s(i, v) = clamp01(unit.row(i).dot(unit.row(v)));
    s(i, i) = 1.0;
  });
  return s;
}

SimilarityMatrix::SparseRow cosine_sparse_row(const Eigen::MatrixXd& unit, int u) {
  SimilarityMatrix::SparseRow row;
  for (int v = 0; v < unit.rows(); ++v) {
    if (v == u) {
      row.emplace_back(u, 1.0);
      continue;
    }
    const double value = clamp01(unit.row(u).dot(unit.row(v)));
    if (value > 0.0) row.emplace_back(v, value);
  }
  return row;
}

// Feature rows whose cosines define the distribution-style relations.
Eigen::MatrixXd relation_feature_rows(const Graph& g, const RelationSpec& spec) {
  switch (spec.kind) {
    case RelationKind::DegreeDist: {
      const int n = g.node_count();
      const int bins = std::max(1, g.max_degree());
      Eigen::MatrixXd histograms(n, bins);
      parallel_for(static_cast<std::size_t>(n), [&](std::size_t u) {
        const Eigen::VectorXd h = degree_distribution_vector(g, static_cast<int>(u), spec.k);
        if (h.size() == 0) {
          histograms.row(static_cast<int>(u)).setZero();
        } else {
          histograms.row(static_cast<int>(u)) = h.transpose();
        }
      });
      return histograms;
    }
    case RelationKind::LabelDist:
      return khop_feature_distribution(g, g.label_matrix(), spec.k);
    case RelationKind::Attr:
      return g.attributes();
    case RelationKind::AttrDist:
      return khop_feature_distribution(g, g.attributes(), spec.k);
    default:
      fail(ErrorKind::Internal, "relation has no feature rows");
  }
}

int graph_diameter(const Graph& g) {
  const int n = g.node_count();
  std::vector<int> eccentricity(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t src) {
    std::vector<int> dist(static_cast<std::size_t>(n), -1);
    std::deque<int> queue;
    dist[src] = 0;
    queue.push_back(static_cast<int>(src));
    int local_max = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : g.neighbors(u)) {
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          local_max = std::max(local_max, dist[static_cast<std::size_t>(v)]);
          queue.push_back(v);
        }
      }
    }
    eccentricity[src] = local_max;
  });
  return *std::max_element(eccentricity.begin(), eccentricity.end());
}

SimilarityMatrix::SparseRow link_sparse_row(const Graph& g, int u) {
  SimilarityMatrix::SparseRow row;
  const double du = 1.0 / std::sqrt(static_cast<double>(g.degree(u) + 1));
  row.reserve(g.neighbors(u).size() + 1);
  for (int v : g.neighbors(u)) {
    const double dv = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));
    row.emplace_back(v, clamp01(du * dv));
  }
  row.emplace_back(u, 1.0);
  return row;
}

SimilarityMatrix::SparseRow spd_sparse_row(const Graph& g, int u, int diameter) {
  const int n = g.node_count();
  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  std::deque<int> queue;
  dist[static_cast<std::size_t>(u)] = 0;
  queue.push_back(u);
  while (!queue.empty()) {
    const int x = queue.front();
    queue.pop_front();
    for (int v : g.neighbors(x)) {
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(x)] + 1;
        queue.push_back(v);
      }
    }
  }
  SimilarityMatrix::SparseRow row;
  for (int v = 0; v < n; ++v) {
    if (v == u) {
      row.emplace_back(u, 1.0);
    } else if (dist[static_cast<std::size_t>(v)] > 0 && diameter > 0) {
      const double value =
          clamp01((static_cast<double>(diameter) - dist[static_cast<std::size_t>(v)] + 1.0) /
                  static_cast<double>(diameter));
      if (value > 0.0) row.emplace_back(v, value);
    }
  }
  return row;
}

SimilarityMatrix::SparseRow pagerank_sparse_row(const Graph& g, int u, double alpha) {
  const Eigen::VectorXd pi = personalized_pagerank(g, u, alpha);
  SimilarityMatrix::SparseRow row;
  for (int v = 0; v < g.node_count(); ++v) {
    if (v == u) {
      row.emplace_back(u, 1.0);
      continue;
    }
    const double value = clamp01(pi(v));
    if (value > 0.0) row.emplace_back(v, value);
  }
  return row;
}

}  // namespace

const char* to_string(RelationKind kind) {
  switch (kind) {
    case RelationKind::Link: return "link";
    case RelationKind::Spd: return "spd";
    case RelationKind::PageRank: return "pagerank";
    case RelationKind::DegreeDist: return "degree_dist";
    case RelationKind::LabelDist: return "label_dist";
    case RelationKind::Attr: return "attr";
    case RelationKind::AttrDist: return "attr_dist";
  }
  return "unknown";
}

RelationKind relation_kind_from_string(const std::string& token) {
  if (token == "link") return RelationKind::Link;
  if (token == "spd") return RelationKind::Spd;
  if (token == "pagerank") return RelationKind::PageRank;
  if (token == "degree_dist") return RelationKind::DegreeDist;
  if (token == "label_dist") return RelationKind::LabelDist;
  if (token == "attr") return RelationKind::Attr;
  if (token == "attr_dist") return RelationKind::AttrDist;
  fail(ErrorKind::Parameter, "unknown relation kind: " + token);
}

std::string RelationSpec::name() const {
  std::string base = to_string(kind);
  const bool has_k = kind == RelationKind::DegreeDist || kind == RelationKind::LabelDist || kind == RelationKind::AttrDist;
  if (has_k && k != 1) base += "_k" + std::to_string(k);
  return base;
}

void RelationSpec::validate(const Graph& g) const {
  if (k < 1) fail(ErrorKind::Parameter, "relation hop count k must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Parameter, "pagerank alpha must be in (0, 1)");
  if (needs_attributes() && !g.has_attributes()) {
    fail(ErrorKind::Capability, std::string("relation '") + name() + "' requires node attributes");
  }
  if (needs_labels() && !g.has_labels()) {
    fail(ErrorKind::Capability, std::string("relation '") + name() + "' requires node labels");
  }
}

SimilarityMatrix SimilarityMatrix::dense(RelationSpec spec, Eigen::MatrixXd values) {
  SimilarityMatrix s;
  s.spec_ = spec;
  s.n_ = static_cast<int>(values.rows());
  if (values.rows() != values.cols()) fail(ErrorKind::Validation, "similarity matrix must be square");
  s.storage_ = std::move(values);
  return s;
}

SimilarityMatrix SimilarityMatrix::sparse(RelationSpec spec, int n, std::vector<SparseRow> rows) {
  SimilarityMatrix s;
  s.spec_ = spec;
  s.n_ = n;
  if (static_cast<int>(rows.size()) != n) fail(ErrorKind::Validation, "sparse row count mismatch");
  for (auto& row : rows) {
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  s.storage_ = std::move(rows);
  return s;
}

SimilarityMatrix SimilarityMatrix::restricted(RelationSpec spec, int n, std::vector<int> rows,
                                              std::vector<SparseRow> row_values) {
  if (rows.size() != row_values.size()) fail(ErrorKind::Validation, "restricted row count mismatch");
  std::vector<SparseRow> full(static_cast<std::size_t>(n));
  std::vector<bool> populated(static_cast<std::size_t>(n), false);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int u = rows[i];
    if (u < 0 || u >= n) fail(ErrorKind::Validation, "restricted row index out of range");
    full[static_cast<std::size_t>(u)] = std::move(row_values[i]);
    populated[static_cast<std::size_t>(u)] = true;
  }
  SimilarityMatrix s = sparse(spec, n, std::move(full));
  s.populated_ = std::move(populated);
  return s;
}

bool SimilarityMatrix::row_populated(int u) const {
  return populated_.empty() || populated_[static_cast<std::size_t>(u)];
}

double SimilarityMatrix::value(int u, int v) const {
  if (u == v) return 1.0;
  if (!row_populated(u)) {
    fail(ErrorKind::Internal, "similarity row " + std::to_string(u) + " is outside the computed block");
  }
  if (const auto* dense = std::get_if<Eigen::MatrixXd>(&storage_)) return (*dense)(u, v);
  const auto& row = std::get<std::vector<SparseRow>>(storage_)[static_cast<std::size_t>(u)];
  auto it = std::lower_bound(row.begin(), row.end(), v,
                             [](const auto& entry, int col) { return entry.first < col; });
  return (it != row.end() && it->first == v) ? it->second : 0.0;
}

SimilarityMatrix::SparseRow SimilarityMatrix::positive_row(int u) const {
  if (!row_populated(u)) {
    fail(ErrorKind::Internal, "similarity row " + std::to_string(u) + " is outside the computed block");
  }
  SparseRow out;
  if (const auto* dense = std::get_if<Eigen::MatrixXd>(&storage_)) {
    for (int v = 0; v < n_; ++v) {
      if (v == u) continue;
      const double s = (*dense)(u, v);
      if (s > 0.0) out.emplace_back(v, s);
    }
    return out;
  }
  const auto& row = std::get<std::vector<SparseRow>>(storage_)[static_cast<std::size_t>(u)];
  for (const auto& [v, s] : row) {
    if (v != u && s > 0.0) out.emplace_back(v, s);
  }
  return out;
}

Eigen::MatrixXd SimilarityMatrix::to_dense() const {
  if (is_restricted()) {
    fail(ErrorKind::Capability, "a row-restricted similarity matrix cannot be densified");
  }
  if (const auto* dense = std::get_if<Eigen::MatrixXd>(&storage_)) return *dense;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  const auto& rows = std::get<std::vector<SparseRow>>(storage_);
  for (int u = 0; u < n_; ++u) {
    for (const auto& [v, s] : rows[static_cast<std::size_t>(u)]) m(u, v) = s;
    m(u, u) = 1.0;
  }
  return m;
}

double SimilarityMatrix::min_stored() const {
  double best = 1.0;
  for (int u = 0; u < n_; ++u) {
    if (!row_populated(u)) continue;
    for (int v = 0; v < n_; ++v) best = std::min(best, value(u, v));
  }
  return best;
}

double SimilarityMatrix::max_stored() const {
  double best = 0.0;
  for (int u = 0; u < n_; ++u) {
    if (!row_populated(u)) continue;
    for (int v = 0; v < n_; ++v) best = std::max(best, value(u, v));
  }
  return best;
}

double SimilarityMatrix::zero_fraction() const {
  if (n_ <= 1) return 0.0;
  std::size_t zeros = 0;
  std::size_t rows = 0;
  for (int u = 0; u < n_; ++u) {
    if (!row_populated(u)) continue;
    ++rows;
    zeros += static_cast<std::size_t>(n_ - 1) - positive_row(u).size();
  }
  if (rows == 0) return 0.0;
  return static_cast<double>(zeros) / (static_cast<double>(rows) * (n_ - 1));
}

std::uint64_t SimilarityMatrix::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  const std::string name = spec_.name();
  mix(name.data(), name.size());
  mix(&n_, sizeof(n_));
  for (int u = 0; u < n_; ++u) {
    if (!row_populated(u)) continue;
    for (const auto& [v, s] : positive_row(u)) {
      mix(&u, sizeof(u));
      mix(&v, sizeof(v));
      mix(&s, sizeof(s));
    }
  }
  return h;
}

ShortestPaths all_pairs_shortest_path(const Graph& g) {
  const int n = g.node_count();
  ShortestPaths result;
  result.distance.resize(n, n);
  result.distance.setConstant(ShortestPaths::kUnreachable);

  std::vector<int> diameters(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t src) {
    const int s = static_cast<int>(src);
    std::vector<int> dist(static_cast<std::size_t>(n), ShortestPaths::kUnreachable);
    std::deque<int> queue;
    dist[static_cast<std::size_t>(s)] = 0;
    queue.push_back(s);
    int local_max = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : g.neighbors(u)) {
        if (dist[static_cast<std::size_t>(v)] == ShortestPaths::kUnreachable) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          local_max = std::max(local_max, dist[static_cast<std::size_t>(v)]);
          queue.push_back(v);
        }
      }
    }
    for (int v = 0; v < n; ++v) result.distance(s, v) = dist[static_cast<std::size_t>(v)];
    diameters[src] = local_max;
  });

  result.diameter = *std::max_element(diameters.begin(), diameters.end());
  return result;
}

Eigen::VectorXd personalized_pagerank(const Graph& g, int source, double alpha) {
  const int n = g.node_count();
  if (source < 0 || source >= n) fail(ErrorKind::Parameter, "pagerank source out of range");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Parameter, "pagerank alpha must be in (0, 1)");

  Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
  pi(source) = 1.0;
  Eigen::VectorXd next(n);
  for (int iter = 0; iter < 1000; ++iter) {
    next.setZero();
    for (int u = 0; u < n; ++u) {
      const double mass = pi(u);
      if (mass == 0.0) continue;
      const auto& nb = g.neighbors(u);
      if (nb.empty()) {
        next(source) += mass;  // dangling column teleports to the source
      } else {
        const double share = mass / static_cast<double>(nb.size());
        for (int v : nb) next(v) += share;
      }
    }
    next *= alpha;
    next(source) += 1.0 - alpha;
    const double diff = (next - pi).lpNorm<1>();
    pi.swap(next);
    if (diff < 1e-10) break;
  }
  return pi;
}

Eigen::MatrixXd khop_feature_distribution(const Graph& g, const Eigen::MatrixXd& features, int k) {
  if (features.rows() != g.node_count()) fail(ErrorKind::Validation, "feature row count must equal node count");
  if (k < 1) fail(ErrorKind::Parameter, "hop count k must be >= 1");
  Eigen::MatrixXd current = features;
  Eigen::MatrixXd next(current.rows(), current.cols());
  for (int round = 0; round < k; ++round) {
    next.setZero();
    for (int u = 0; u < g.node_count(); ++u) {
      for (int v : g.neighbors(u)) next.row(u) += current.row(v);
    }
    current.swap(next);
  }
  for (int u = 0; u < g.node_count(); ++u) {
    const double norm = current.row(u).cwiseAbs().sum();
    if (norm > 0.0) current.row(u) /= norm;
  }
  return current;
}

Eigen::VectorXd degree_distribution_vector(const Graph& g, int node, int k) {
  if (k < 1) fail(ErrorKind::Parameter, "hop count k must be >= 1");
  const int bins = g.max_degree();
  Eigen::VectorXd histogram = Eigen::VectorXd::Zero(bins);

  // BFS out to depth k; collect nodes at exactly distance k.
  std::vector<int> dist(static_cast<std::size_t>(g.node_count()), -1);
  std::deque<int> queue;
  dist[static_cast<std::size_t>(node)] = 0;
  queue.push_back(node);
  double total = 0.0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (dist[static_cast<std::size_t>(u)] == k) {
      histogram(g.degree(u) - 1) += 1.0;
      total += 1.0;
      continue;
    }
    for (int v : g.neighbors(u)) {
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  if (total > 0.0) histogram /= total;
  return histogram;
}

SimilarityMatrix compute_similarity(const Graph& g, const RelationSpec& spec) {
  spec.validate(g);
  const int n = g.node_count();
  if (n < 1) fail(ErrorKind::Validation, "graph has no nodes");

  switch (spec.kind) {
    case RelationKind::Link: {
      std::vector<SimilarityMatrix::SparseRow> rows(static_cast<std::size_t>(n));
      for (int u = 0; u < n; ++u) rows[static_cast<std::size_t>(u)] = link_sparse_row(g, u);
      return SimilarityMatrix::sparse(spec, n, std::move(rows));
    }

    case RelationKind::Spd: {
      const ShortestPaths sp = all_pairs_shortest_path(g);
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
      const double diameter = static_cast<double>(sp.diameter);
      for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
          if (u == v) {
            s(u, v) = 1.0;
          } else if (sp.distance(u, v) == ShortestPaths::kUnreachable || sp.diameter == 0) {
            s(u, v) = 0.0;
          } else {
            s(u, v) = clamp01((diameter - sp.distance(u, v) + 1.0) / diameter);
          }
        }
      }
      return SimilarityMatrix::dense(spec, std::move(s));
    }

    case RelationKind::PageRank: {
      Eigen::MatrixXd s(n, n);
      parallel_for(static_cast<std::size_t>(n), [&](std::size_t u) {
        const Eigen::VectorXd pi = personalized_pagerank(g, static_cast<int>(u), spec.alpha);
        s.row(static_cast<int>(u)) = pi.transpose();
      });
      for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) s(u, v) = clamp01(s(u, v));
        s(u, u) = 1.0;
      }
      return SimilarityMatrix::dense(spec, std::move(s));
    }

    case RelationKind::DegreeDist:
    case RelationKind::LabelDist:
    case RelationKind::Attr:
    case RelationKind::AttrDist:
      return SimilarityMatrix::dense(spec, cosine_similarity_matrix(relation_feature_rows(g, spec)));
  }
  fail(ErrorKind::Internal, "unhandled relation kind");
}

SimilarityMatrix compute_similarity_rows(const Graph& g, const RelationSpec& spec,
                                         const std::vector<int>& rows) {
  spec.validate(g);
  const int n = g.node_count();
  if (rows.empty()) fail(ErrorKind::Parameter, "row-restricted similarity needs at least one row");
  for (int u : rows) {
    if (u < 0 || u >= n) fail(ErrorKind::Parameter, "restricted row index out of range");
  }

  std::vector<SimilarityMatrix::SparseRow> blocks(rows.size());
  switch (spec.kind) {
    case RelationKind::Link: {
      parallel_for(rows.size(), [&](std::size_t i) { blocks[i] = link_sparse_row(g, rows[i]); });
      break;
    }
    case RelationKind::Spd: {
      // The normalizer is the global diameter, so one pass over all sources
      // is still needed; memory stays proportional to the row block.
      const int diameter = graph_diameter(g);
      parallel_for(rows.size(), [&](std::size_t i) { blocks[i] = spd_sparse_row(g, rows[i], diameter); });
      break;
    }
    case RelationKind::PageRank: {
      parallel_for(rows.size(),
                   [&](std::size_t i) { blocks[i] = pagerank_sparse_row(g, rows[i], spec.alpha); });
      break;
    }
    case RelationKind::DegreeDist:
    case RelationKind::LabelDist:
    case RelationKind::Attr:
    case RelationKind::AttrDist: {
      const Eigen::MatrixXd unit = unit_rows(relation_feature_rows(g, spec));
      parallel_for(rows.size(), [&](std::size_t i) { blocks[i] = cosine_sparse_row(unit, rows[i]); });
      break;
    }
  }
  return SimilarityMatrix::restricted(spec, n, rows, std::move(blocks));
}

void save_similarity(const SimilarityMatrix& s, const std::string& path) {
  if (s.is_restricted()) {
    fail(ErrorKind::Capability, "row-restricted similarity matrices are not cacheable");
  }
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorKind::Io, "cannot write file: " + tmp.string());
    const auto& spec = s.spec();
    out << spec.name() << ',' << to_string(spec.kind) << ',' << spec.k << ',';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", spec.alpha);
    out << buf << ',' << s.size() << '\n';
    for (int u = 0; u < s.size(); ++u) {
      for (const auto& [v, value] : s.positive_row(u)) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        out << u << ',' << v << ',' << buf << '\n';
      }
      out << u << ',' << u << ",1\n";
    }
  }
  // Publish atomically so concurrent runs sharing a cache directory are safe.
  std::filesystem::rename(tmp, target);
}

SimilarityMatrix load_similarity(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open similarity cache: " + path);
  std::string header;
  if (!std::getline(in, header)) fail(ErrorKind::Parse, path + ": empty similarity cache");

  std::vector<std::string> fields;
  {
    std::string current;
    for (char c : header) {
      if (c == ',') {
        fields.push_back(current);
        current.clear();
      } else if (c != '\r') {
        current.push_back(c);
      }
    }
    fields.push_back(current);
  }
  if (fields.size() != 5) fail(ErrorKind::Parse, path + ": expected header 'relation,kind,k,alpha,n'");

  RelationSpec spec;
  spec.kind = relation_kind_from_string(fields[1]);
  spec.k = std::stoi(fields[2]);
  spec.alpha = std::stod(fields[3]);
  const int n = std::stoi(fields[4]);

  const bool sparse = spec.kind == RelationKind::Link;
  std::vector<SimilarityMatrix::SparseRow> rows(static_cast<std::size_t>(n));
  Eigen::MatrixXd dense;
  if (!sparse) dense = Eigen::MatrixXd::Zero(n, n);

  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    int u = 0, v = 0;
    double value = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%lg", &u, &v, &value) != 3) {
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": expected 'u,v,value'");
    }
    if (u < 0 || v < 0 || u >= n || v >= n) {
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": index out of range");
    }
    if (value < -kValueEps || value > 1.0 + kValueEps) {
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": similarity outside [0,1]");
    }
    if (sparse) {
      rows[static_cast<std::size_t>(u)].emplace_back(v, value);
    } else {
      dense(u, v) = value;
    }
  }
  if (sparse) return SimilarityMatrix::sparse(spec, n, std::move(rows));
  for (int u = 0; u < n; ++u) dense(u, u) = 1.0;
  return SimilarityMatrix::dense(spec, std::move(dense));
}

}  // namespace nci
