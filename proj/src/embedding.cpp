#include "nci/embedding.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>
#include <vector>

#include "nci/error.hpp"
#include "nci/rng.hpp"

namespace nci {

namespace {

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

}  // namespace

SpectralBasis eigendecompose_similarity(const SimilarityMatrix& s) {
  const Eigen::MatrixXd dense = s.to_dense();
  // Lemma-style factorization needs a symmetric matrix; PageRank rows are
  // directional, so decompose (S + S^T) / 2.
  const Eigen::MatrixXd sym = 0.5 * (dense + dense.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::Numerical, "eigendecomposition failed to converge for relation " + s.spec().name());
  }

  const int n = s.size();
  SpectralBasis basis;
  basis.relation = s.spec().name();
  basis.vectors.resize(n, n);
  basis.values.resize(n);

  double negative_mass = 0.0;
  double total_mass = 0.0;
  // Solver returns ascending order; reverse to descending by signed value.
  for (int i = 0; i < n; ++i) {
    const int src = n - 1 - i;
    double lambda = solver.eigenvalues()(src);
    Eigen::VectorXd vec = solver.eigenvectors().col(src);
    int arg_max = 0;
    for (int r = 1; r < n; ++r) {
      if (std::abs(vec(r)) > std::abs(vec(arg_max))) arg_max = r;
    }
    if (vec(arg_max) < 0.0) vec = -vec;
    total_mass += std::abs(lambda);
    if (lambda < 0.0) {
      negative_mass += -lambda;
      lambda = 0.0;
    }
    basis.values(i) = lambda;
    basis.vectors.col(i) = vec;
  }
  basis.clamp_fraction = total_mass > 0.0 ? negative_mass / total_mass : 0.0;

  // Residual check on the retained spectrum (‖Sx − λx‖ ≤ 1e−9‖S‖).
  if (n <= 2048) {
    const double scale = sym.norm();
    for (int i = 0; i < n; ++i) {
      if (basis.values(i) == 0.0) continue;
      const double residual = (sym * basis.vectors.col(i) - basis.values(i) * basis.vectors.col(i)).norm();
      if (residual > 1e-9 * std::max(scale, 1.0)) {
        fail(ErrorKind::Numerical, "eigenpair residual out of tolerance for relation " + s.spec().name());
      }
    }
  }
  return basis;
}

EmbeddingMatrix embedding_from_basis(const SpectralBasis& basis, int d) {
  if (d < 1 || d > basis.size()) {
    fail(ErrorKind::Parameter, "embedding dimension must be in [1, |V|], got " + std::to_string(d));
  }
  EmbeddingMatrix z;
  z.values = basis.vectors.leftCols(d) * basis.values.head(d).cwiseSqrt().asDiagonal();
  z.source = "evd:" + basis.relation + ",d=" + std::to_string(d);
  z.clamp_fraction = basis.clamp_fraction;
  return z;
}

EmbeddingMatrix generate_evd_embedding(const SimilarityMatrix& s, int d) {
  return embedding_from_basis(eigendecompose_similarity(s), d);
}

double pairwise_distance(const EmbeddingMatrix& z, int u, int v) {
  return (z.values.row(u) - z.values.row(v)).norm();
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& z) {
  EmbeddingMatrix out = z;
  out.zero_row_count = 0;
  for (int u = 0; u < out.rows(); ++u) {
    const double norm = out.values.row(u).norm();
    if (norm > 0.0) {
      out.values.row(u) /= norm;
    } else {
      ++out.zero_row_count;
    }
  }
  out.normalized = true;
  return out;
}

EmbeddingMatrix shuffle_embedding(const EmbeddingMatrix& z, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "row-shuffle");
  const std::vector<int> perm = random_permutation(z.rows(), rng);
  EmbeddingMatrix out = z;
  for (int u = 0; u < z.rows(); ++u) {
    out.values.row(u) = z.values.row(perm[static_cast<std::size_t>(u)]);
  }
  out.source = "shuffle:" + std::to_string(seed);
  return out;
}

double distance_std(const EmbeddingMatrix& z, std::size_t sample_size, std::uint64_t seed,
                    std::size_t exhaustive_limit) {
  const int n = z.rows();
  if (n < 2) fail(ErrorKind::Parameter, "distance_std needs at least two rows");

  std::vector<double> distances;
  const std::size_t total_pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
  if (static_cast<std::size_t>(n) <= exhaustive_limit || total_pairs <= sample_size) {
    distances.reserve(total_pairs);
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) distances.push_back(pairwise_distance(z, u, v));
    }
  } else {
    Rng rng = Rng::substream(seed, "distance-std");
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(sample_size * 2);
    distances.reserve(sample_size);
    while (distances.size() < sample_size) {
      const int u = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n)));
      const int v = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n)));
      if (u == v) continue;
      const int lo = std::min(u, v);
      const int hi = std::max(u, v);
      const std::uint64_t code = static_cast<std::uint64_t>(lo) * static_cast<std::uint64_t>(n) + hi;
      if (!seen.insert(code).second) continue;
      distances.push_back(pairwise_distance(z, lo, hi));
    }
  }

  // Accumulate in sorted order: the result depends only on the distance
  // multiset, so shuffled embeddings give bit-identical values.
  std::sort(distances.begin(), distances.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double d : distances) {
    sum += d;
    sum_sq += d * d;
  }
  const double count = static_cast<double>(distances.size());
  const double mean = sum / count;
  const double var = std::max(0.0, sum_sq / count - mean * mean);
  return std::sqrt(var);
}

EmbeddingMatrix demo_rp_embedding(const Graph& g, int d, std::uint64_t seed) {
  if (d < 1) fail(ErrorKind::Parameter, "embedding dimension must be >= 1");
  const int n = g.node_count();

  Rng rng = Rng::substream(seed, "demo-rp");
  Eigen::MatrixXd projection = Eigen::MatrixXd::Zero(n, d);
  for (int u = 0; u < n; ++u) {
    for (int j = 0; j < d; ++j) {
      const double r = rng.next_double();
      if (r < 1.0 / 6.0) {
        projection(u, j) = 1.0;
      } else if (r < 1.0 / 3.0) {
        projection(u, j) = -1.0;
      }
    }
  }

  const Eigen::MatrixXd normalized_adj = normalized_adjacency_with_self_loops(g);
  const double weights[3] = {1.0, 1.0, 0.5};
  Eigen::MatrixXd propagated = projection;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, d);
  for (int hop = 0; hop < 3; ++hop) {
    propagated = normalized_adj * propagated;
    acc += weights[hop] * propagated;
  }

  EmbeddingMatrix z;
  z.values = std::move(acc);
  z.source = "demo-rp:" + std::to_string(seed);
  EmbeddingMatrix out = normalize_rows(z);
  out.source = z.source;
  return out;
}

EmbeddingMatrix load_embedding(const Graph& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open embedding file: " + path);
  std::string header;
  if (!std::getline(in, header)) fail(ErrorKind::Parse, path + ": empty embedding file");
  const auto columns = split_csv(header);
  if (columns.size() < 2 || columns[0] != "node") {
    fail(ErrorKind::Parse, path + ": expected header 'node,e1,...,ed'");
  }
  const int dim = static_cast<int>(columns.size()) - 1;

  EmbeddingMatrix z;
  z.values = Eigen::MatrixXd::Zero(g.node_count(), dim);
  z.source = "file:" + path;
  std::vector<bool> seen(static_cast<std::size_t>(g.node_count()), false);

  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != dim + 1) {
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": ragged row");
    }
    const int u = g.index_of(fields[0]);
    if (u < 0) fail(ErrorKind::Reference, path + ": embedding row references unknown node '" + fields[0] + "'");
    if (seen[static_cast<std::size_t>(u)]) {
      fail(ErrorKind::Reference, path + ": duplicate embedding row for node '" + fields[0] + "'");
    }
    seen[static_cast<std::size_t>(u)] = true;
    for (int j = 0; j < dim; ++j) {
      try {
        z.values(u, j) = std::stod(fields[static_cast<std::size_t>(j) + 1]);
      } catch (const std::exception&) {
        fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": expected a real value");
      }
    }
  }
  for (int u = 0; u < g.node_count(); ++u) {
    if (!seen[static_cast<std::size_t>(u)]) {
      fail(ErrorKind::Reference, path + ": missing embedding row for node '" + g.node_id(u) + "'");
    }
  }
  return z;
}

void save_embedding(const EmbeddingMatrix& z, const Graph& g, const std::string& path) {
  if (z.rows() != g.node_count()) fail(ErrorKind::Validation, "embedding row count does not match graph");
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write file: " + path);
  out << "node";
  for (int j = 0; j < z.dim(); ++j) out << ",e" << (j + 1);
  out << '\n';
  char buf[64];
  for (int u = 0; u < z.rows(); ++u) {
    out << g.node_id(u);
    for (int j = 0; j < z.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", z.values(u, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace nci
