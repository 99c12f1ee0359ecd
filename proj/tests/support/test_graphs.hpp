#pragma once

#include <unistd.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "nci/graph.hpp"
#include "nci/rng.hpp"

namespace nci::testing {

inline Graph graph_from_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                              const std::vector<std::string>& isolated = {}) {
  std::vector<std::string> ids;
  std::vector<std::pair<int, int>> indexed;
  auto intern = [&](const std::string& id) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) return static_cast<int>(i);
    }
    ids.push_back(id);
    return static_cast<int>(ids.size()) - 1;
  };
  for (const auto& [a, b] : edges) {
    const int u = intern(a);
    const int v = intern(b);
    indexed.emplace_back(u, v);
  }
  for (const auto& id : isolated) intern(id);
  return Graph::build(std::move(ids), std::move(indexed));
}

inline Graph path_graph(int n) {
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 0; i + 1 < n; ++i) {
    edges.emplace_back("n" + std::to_string(i), "n" + std::to_string(i + 1));
  }
  return graph_from_edges(edges);
}

inline double normal_sample(Rng& rng) {
  // Box-Muller; both inputs strictly positive.
  const double u1 = 1.0 - rng.next_double();
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

struct SbmOptions {
  int nodes = 200;
  int blocks = 4;
  double p_in = 0.25;
  double p_out = 0.02;
  int attr_dim = 12;
  double attr_noise = 0.35;
  std::uint64_t seed = 7;
};

// Stochastic block model with block labels and noisy per-block attribute
// prototypes. Nonnegative attributes keep cosine similarities in [0, 1]
// with a broad spread of values.
inline Graph sbm_graph(const SbmOptions& opt) {
  Rng rng = Rng::substream(opt.seed, "sbm");
  std::vector<std::string> ids;
  std::vector<int> block(static_cast<std::size_t>(opt.nodes));
  for (int u = 0; u < opt.nodes; ++u) {
    ids.push_back("v" + std::to_string(u));
    block[static_cast<std::size_t>(u)] = u % opt.blocks;
  }
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < opt.nodes; ++u) {
    for (int v = u + 1; v < opt.nodes; ++v) {
      const double p = block[static_cast<std::size_t>(u)] == block[static_cast<std::size_t>(v)]
                           ? opt.p_in
                           : opt.p_out;
      if (rng.next_double() < p) edges.emplace_back(u, v);
    }
  }
  Graph g = Graph::build(std::move(ids), std::move(edges));

  Rng attr_rng = Rng::substream(opt.seed, "sbm-attrs");
  Eigen::MatrixXd prototypes(opt.blocks, opt.attr_dim);
  for (int b = 0; b < opt.blocks; ++b) {
    for (int j = 0; j < opt.attr_dim; ++j) {
      prototypes(b, j) = attr_rng.next_double();
    }
    prototypes.row(b) /= prototypes.row(b).norm();
  }
  Eigen::MatrixXd attrs(opt.nodes, opt.attr_dim);
  for (int u = 0; u < opt.nodes; ++u) {
    for (int j = 0; j < opt.attr_dim; ++j) {
      const double noise = opt.attr_noise * std::abs(normal_sample(attr_rng));
      attrs(u, j) = prototypes(block[static_cast<std::size_t>(u)], j) + noise;
    }
  }
  g.attach_attributes(std::move(attrs));

  std::vector<std::string> class_names;
  for (int b = 0; b < opt.blocks; ++b) class_names.push_back("c" + std::to_string(b));
  g.attach_labels(std::move(block), std::move(class_names));
  return g;
}

// Unique scratch directory under the build tree.
class TempDir {
 public:
  explicit TempDir(const std::string& hint) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("nci_test_" + hint + "_" + std::to_string(counter++) + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace nci::testing
