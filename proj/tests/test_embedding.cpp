#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nci/embedding.hpp"
#include "nci/error.hpp"
#include "support/test_graphs.hpp"

using namespace nci;
using namespace nci::testing;

namespace {

SimilarityMatrix dense_similarity(Eigen::MatrixXd values, RelationKind kind = RelationKind::Spd) {
  return SimilarityMatrix::dense({kind}, std::move(values));
}

Eigen::MatrixXd random_psd(int n, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "psd");
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = normal_sample(rng);
  }
  Eigen::MatrixXd s = m * m.transpose();
  s /= s.cwiseAbs().maxCoeff();  // keep entries within [-1, 1]
  return s;
}

// Gram matrix of random nonnegative unit vectors: PSD with unit diagonal
// and entries in [0, 1], the shape real similarity matrices take.
Eigen::MatrixXd random_similarity_psd(int n, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "psd-unit");
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = rng.next_double();
    m.row(i) /= m.row(i).norm();
  }
  return m * m.transpose();
}

}  // namespace

TEST_SUITE("embedding") {

TEST_CASE("evd of the identity reconstructs the identity") {
  const SimilarityMatrix s = dense_similarity(Eigen::MatrixXd::Identity(3, 3));
  const EmbeddingMatrix z = generate_evd_embedding(s, 3);
  const Eigen::MatrixXd zz = z.values * z.values.transpose();
  CHECK((zz - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rank-1 psd recovers the generating vector with a fixed sign") {
  Eigen::VectorXd v(4);
  v << 0.1, -0.7, 0.5, 0.2;
  const SimilarityMatrix s = dense_similarity(v * v.transpose());
  const EmbeddingMatrix z = generate_evd_embedding(s, 1);
  // Sign convention: the largest-magnitude entry of the eigenvector is
  // positive, so the recovered column is -v here.
  Eigen::VectorXd expected = v;
  if (expected(1) < 0) expected = -expected;  // entry -0.7 dominates
  CHECK((z.values.col(0) - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("full-rank reconstruction of a random psd matrix") {
  const Eigen::MatrixXd s = random_psd(30, 5);
  const EmbeddingMatrix z = generate_evd_embedding(dense_similarity(s), 30);
  const double rel = (z.values * z.values.transpose() - s).norm() / s.norm();
  CHECK(rel <= 1e-8);
  CHECK(z.clamp_fraction == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("retained eigenvalues are the largest; reconstruction error non-increasing in d") {
  const Eigen::MatrixXd s = random_psd(20, 9);
  const SpectralBasis basis = eigendecompose_similarity(dense_similarity(s));
  for (int i = 1; i < basis.size(); ++i) CHECK(basis.values(i - 1) >= basis.values(i));
  double previous = std::numeric_limits<double>::infinity();
  for (int d : {1, 4, 9, 16, 20}) {
    const EmbeddingMatrix z = embedding_from_basis(basis, d);
    const double err = (z.values * z.values.transpose() - s).norm();
    CHECK(err <= previous + 1e-12);
    previous = err;
  }
}

TEST_CASE("sampled triplets respect relation coherence on psd inputs") {
  // Unit diagonal keeps every factor row at norm one, which is what the
  // coherence argument needs.
  const Eigen::MatrixXd s = random_similarity_psd(60, 12);
  const SimilarityMatrix sim = dense_similarity(s);
  const EmbeddingMatrix z = generate_evd_embedding(sim, 60);
  Rng rng = Rng::substream(99, "triplets");
  int checked = 0;
  for (int trial = 0; trial < 20000 && checked < 5000; ++trial) {
    const int u = static_cast<int>(rng.bounded(60));
    const int v = static_cast<int>(rng.bounded(60));
    const int w = static_cast<int>(rng.bounded(60));
    if (u == v || u == w || v == w) continue;
    const double gap = s(u, v) - s(u, w);
    if (gap <= 1e-6) continue;
    ++checked;
    CHECK(pairwise_distance(z, u, w) - pairwise_distance(z, u, v) > 0.0);
  }
  CHECK(checked > 1000);
}

TEST_CASE("dimension out of range is a parameter error") {
  const SimilarityMatrix s = dense_similarity(Eigen::MatrixXd::Identity(3, 3));
  CHECK_THROWS_AS(generate_evd_embedding(s, 0), Error);
  CHECK_THROWS_AS(generate_evd_embedding(s, 4), Error);
}

TEST_CASE("pairwise distances") {
  EmbeddingMatrix z;
  z.values = Eigen::MatrixXd(3, 2);
  z.values << 1, 0, 0, 1, -1, 0;
  CHECK(pairwise_distance(z, 0, 0) == 0.0);
  CHECK(pairwise_distance(z, 0, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(pairwise_distance(z, 0, 2) == doctest::Approx(2.0));
}

TEST_CASE("row normalization") {
  EmbeddingMatrix z;
  z.values = Eigen::MatrixXd(2, 2);
  z.values << 3, 4, 0, 0;
  const EmbeddingMatrix n = normalize_rows(z);
  CHECK(n.values(0, 0) == doctest::Approx(0.6));
  CHECK(n.values(0, 1) == doctest::Approx(0.8));
  CHECK(n.values.row(1).cwiseAbs().sum() == 0.0);
  CHECK(n.zero_row_count == 1);
  CHECK(n.normalized);

  const EmbeddingMatrix again = normalize_rows(n);
  CHECK((again.values.row(0) - n.values.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("shuffle preserves the row multiset and the distance distribution") {
  const Graph g = sbm_graph({.nodes = 30, .seed = 17});
  const EmbeddingMatrix z = demo_rp_embedding(g, 6, 4);

  SUBCASE("single row is untouched") {
    EmbeddingMatrix one;
    one.values = Eigen::MatrixXd::Ones(1, 3);
    const EmbeddingMatrix shuffled = shuffle_embedding(one, 7);
    CHECK(shuffled.values == one.values);
  }
  SUBCASE("row multiset is preserved") {
    const EmbeddingMatrix shuffled = shuffle_embedding(z, 7);
    auto collect = [](const EmbeddingMatrix& m) {
      std::vector<std::vector<double>> rows;
      for (int u = 0; u < m.rows(); ++u) {
        std::vector<double> row(static_cast<std::size_t>(m.dim()));
        for (int j = 0; j < m.dim(); ++j) row[static_cast<std::size_t>(j)] = m.values(u, j);
        rows.push_back(std::move(row));
      }
      std::sort(rows.begin(), rows.end());
      return rows;
    };
    CHECK(collect(z) == collect(shuffled));
  }
  SUBCASE("fixed seed reproduces the permutation") {
    CHECK(shuffle_embedding(z, 7).values == shuffle_embedding(z, 7).values);
  }
  SUBCASE("exhaustive distance std is bit-identical after shuffling") {
    const EmbeddingMatrix shuffled = shuffle_embedding(z, 7);
    CHECK(distance_std(z, 1000, 1) == distance_std(shuffled, 1000, 1));
  }
}

TEST_CASE("distance std") {
  SUBCASE("identical rows have zero spread") {
    EmbeddingMatrix z;
    z.values = Eigen::MatrixXd::Ones(5, 3);
    CHECK(distance_std(z, 100, 1) == 0.0);
  }
  SUBCASE("a single pair has zero variance") {
    EmbeddingMatrix z;
    z.values = Eigen::MatrixXd(2, 2);
    z.values << 1, 0, 0, 1;
    CHECK(distance_std(z, 100, 1) == 0.0);
  }
  SUBCASE("sampled estimate tracks the exhaustive value") {
    const Graph g = sbm_graph({.nodes = 100, .seed = 23});
    const EmbeddingMatrix z = demo_rp_embedding(g, 8, 9);
    const double exact = distance_std(z, 1, 1, 2000);
    const double sampled = distance_std(z, 2000, 1, 0);  // force the sampling path
    CHECK(std::abs(sampled - exact) / exact < 0.05);
  }
}

TEST_CASE("demo random-projection embedding") {
  const Graph g = sbm_graph({.nodes = 60, .blocks = 2, .p_in = 0.35, .p_out = 0.02, .seed = 31});
  const EmbeddingMatrix a = demo_rp_embedding(g, 16, 12);
  const EmbeddingMatrix b = demo_rp_embedding(g, 16, 12);
  CHECK(a.values == b.values);  // bitwise determinism
  CHECK(a.rows() == 60);
  CHECK(a.dim() == 16);

  double within = 0.0, cross = 0.0;
  int within_count = 0, cross_count = 0;
  for (int u = 0; u < 60; ++u) {
    for (int v = u + 1; v < 60; ++v) {
      const double d = pairwise_distance(a, u, v);
      const bool same = g.labels()[static_cast<std::size_t>(u)] == g.labels()[static_cast<std::size_t>(v)];
      (same ? within : cross) += d;
      ++(same ? within_count : cross_count);
    }
  }
  CHECK(within / within_count < cross / cross_count);
}

TEST_CASE("embedding files") {
  const Graph g = path_graph(4);
  EmbeddingMatrix z;
  z.values = Eigen::MatrixXd::Random(4, 3);
  TempDir dir("emb_io");

  SUBCASE("round-trip") {
    save_embedding(z, g, dir.file("z.csv"));
    const EmbeddingMatrix back = load_embedding(g, dir.file("z.csv"));
    CHECK((back.values - z.values).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("missing node is a reference error naming the node") {
    write_file(dir.file("short.csv"), "node,e1\nn0,1\nn1,2\nn2,3\n");
    try {
      load_embedding(g, dir.file("short.csv"));
      FAIL("expected a reference error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Reference);
      CHECK(std::string(e.what()).find("n3") != std::string::npos);
    }
  }
  SUBCASE("unknown node is a reference error") {
    write_file(dir.file("extra.csv"), "node,e1\nn0,1\nn1,2\nn2,3\nn3,4\nzz,5\n");
    CHECK_THROWS_AS(load_embedding(g, dir.file("extra.csv")), Error);
  }
  SUBCASE("ragged row is a parse error") {
    write_file(dir.file("ragged.csv"), "node,e1,e2\nn0,1\n");
    try {
      load_embedding(g, dir.file("ragged.csv"));
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
    }
  }
}

}  // TEST_SUITE
