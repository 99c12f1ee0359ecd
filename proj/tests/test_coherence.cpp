#include <doctest.h>

#include <cmath>

#include "nci/coherence.hpp"
#include "nci/error.hpp"
#include "nci/parallel.hpp"
#include "nci/stats.hpp"
#include "support/test_graphs.hpp"

using namespace nci;
using namespace nci::testing;

namespace {

EmbeddingMatrix unit_rows(const Eigen::MatrixXd& values) {
  EmbeddingMatrix z;
  z.values = values;
  return normalize_rows(z);
}

// Two antipodal clusters of unit vectors with within-cluster similarity 0.9
// and zero cross-cluster similarity.
struct TwoClusters {
  SimilarityMatrix similarity;
  EmbeddingMatrix embedding;
};

TwoClusters two_clusters(int per_side) {
  const int n = 2 * per_side;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd z(n, 2);
  for (int i = 0; i < n; ++i) {
    const bool left = i < per_side;
    const double jitter = 0.002 * i;
    const double angle = (left ? 0.0 : 3.14159265358979323846) + jitter;
    z(i, 0) = std::cos(angle);
    z(i, 1) = std::sin(angle);
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        s(i, j) = 1.0;
      } else if ((j < per_side) == left) {
        s(i, j) = 0.9;
      }
    }
  }
  return {SimilarityMatrix::dense({RelationKind::Attr}, std::move(s)), unit_rows(z)};
}

}  // namespace

TEST_SUITE("coherence") {

TEST_CASE("clustering null bound") {
  CHECK(clustering_null_bound(0.0) == 1.0);
  CHECK(std::abs(clustering_null_bound(1.64) - 0.4265) < 1e-4);
  CHECK(clustering_null_bound(10.0) == doctest::Approx(2.0 / 102.0));
  CHECK_THROWS_AS(clustering_null_bound(-1.0), Error);
}

TEST_CASE("separated clusters score a clustering rate of one") {
  const TwoClusters fixture = two_clusters(6);
  CoherenceParams p;
  p.seed = 5;
  const RateResult r = clustering_coherence_rate(fixture.embedding, fixture.similarity, p);
  CHECK(r.rate == 1.0);
  CHECK(r.usable_queries == 12);
}

TEST_CASE("single query with exactly two of three pairs over the margin") {
  // Asymmetric similarity: only node 0 has a nonzero row, so it is the only
  // usable query. Its similar set is {1}, its intruders {2, 3, 4}.
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < 5; ++i) s(i, i) = 1.0;
  s(0, 1) = 0.9;
  const SimilarityMatrix sim = SimilarityMatrix::dense({RelationKind::PageRank}, std::move(s));

  Eigen::MatrixXd rows(5, 2);
  rows << 1, 0,   // query
      1, 0,       // similar, distance 0
      -1, 0,      // intruder, distance 2 (clears)
      -1, 0,      // intruder, distance 2 (clears)
      1, 0;       // intruder, distance 0 (fails)
  CoherenceParams p;
  p.seed = 2;
  const RateResult r = clustering_coherence_rate(unit_rows(rows), sim, p);
  CHECK(r.usable_queries == 1);
  CHECK(r.pairs_used == 3);
  CHECK(r.rate == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("degenerate relation raises a degenerate error naming the relation") {
  // All rows zero except the diagonal: no query has a similarity value.
  const SimilarityMatrix sim =
      SimilarityMatrix::dense({RelationKind::Attr}, Eigen::MatrixXd::Identity(4, 4));
  EmbeddingMatrix z = unit_rows(Eigen::MatrixXd::Random(4, 3));
  CoherenceParams p;
  try {
    clustering_coherence_rate(z, sim, p);
    FAIL("expected a degenerate error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
    CHECK(std::string(e.what()).find("attr") != std::string::npos);
  }
}

TEST_CASE("band thresholds follow the interpolation formula") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(5, 5);
  // Row 0 has one value inside each band for eta_s = 0.7:
  // bands [0.9, 1), [0.8, 0.9), [0.7, 0.8).
  s(0, 1) = 0.95;
  s(0, 2) = 0.85;
  s(0, 3) = 0.75;
  s(1, 0) = 0.95;
  s(2, 0) = 0.85;
  s(3, 0) = 0.75;
  const SimilarityMatrix sim = SimilarityMatrix::dense({RelationKind::Attr}, std::move(s));
  CoherenceParams p;
  Rng rng = Rng::substream(1, "test-bands");
  const auto bands = build_similar_bands(sim, 0, 0.7, p, rng);
  REQUIRE(bands.has_value());
  CHECK(*bands == std::vector<int>{1, 2, 3});  // deterministic: one candidate per band
  Rng other = Rng::substream(999, "unrelated-stream");
  CHECK(*build_similar_bands(sim, 0, 0.7, p, other) == *bands);  // no sampling freedom

  SUBCASE("similarity strictly decreases along the band order") {
    CHECK(sim.value(0, (*bands)[0]) > sim.value(0, (*bands)[1]));
    CHECK(sim.value(0, (*bands)[1]) > sim.value(0, (*bands)[2]));
  }
  SUBCASE("boundary values land in the higher band") {
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(5, 5);
    t(0, 1) = 0.9;   // exactly eta_1: band 1
    t(0, 2) = 0.8;   // exactly eta_2: band 2
    t(0, 3) = 0.7;   // exactly eta_3: band 3
    const SimilarityMatrix sim2 = SimilarityMatrix::dense({RelationKind::Attr}, std::move(t));
    Rng rng2 = Rng::substream(1, "test-bands");
    const auto b2 = build_similar_bands(sim2, 0, 0.7, p, rng2);
    REQUIRE(b2.has_value());
    CHECK(*b2 == std::vector<int>{1, 2, 3});
  }
  SUBCASE("an empty band is a skip marker") {
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(5, 5);
    t(0, 1) = 0.95;
    t(0, 2) = 0.75;  // nothing in [0.8, 0.9)
    const SimilarityMatrix sim2 = SimilarityMatrix::dense({RelationKind::Attr}, std::move(t));
    Rng rng2 = Rng::substream(1, "test-bands");
    CHECK_FALSE(build_similar_bands(sim2, 0, 0.7, p, rng2).has_value());
  }
}

// Query 0 sees twenty filler nodes at similarity 0.1 (eta_s resolves to 0.1,
// so the bands are [0.7, 1), [0.4, 0.7), [0.1, 0.4)), one node per upper
// band, and fillers sharing band 3. Every other query lacks a full band set
// and is skipped.
namespace {
Eigen::MatrixXd banded_similarity() {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(24, 24);
  auto set = [&s](int u, int v, double value) {
    s(u, v) = value;
    s(v, u) = value;
  };
  for (int v = 1; v <= 20; ++v) set(0, v, 0.1);
  set(0, 21, 0.9);
  set(0, 22, 0.5);
  set(0, 23, 0.2);
  return s;
}

Eigen::MatrixXd angled_rows(double angle21, double angle22, double angle23) {
  Eigen::MatrixXd rows(24, 2);
  auto place = [&rows](int u, double angle) {
    rows(u, 0) = std::cos(angle);
    rows(u, 1) = std::sin(angle);
  };
  place(0, 0.0);
  for (int v = 1; v <= 20; ++v) place(v, 2.2 + 0.01 * v);  // far from the query
  place(21, angle21);
  place(22, angle22);
  place(23, angle23);
  return rows;
}
}  // namespace

TEST_CASE("smoothness rate is one for an order isomorphism and zero for a violation") {
  const SimilarityMatrix sim = SimilarityMatrix::dense({RelationKind::Attr}, banded_similarity());
  CoherenceParams p;
  p.seed = 3;

  // Distances increase strictly as band similarity falls.
  const RateResult ordered = smoothness_coherence_rate(unit_rows(angled_rows(0.2, 0.6, 1.4)), sim, p);
  CHECK(ordered.usable_queries == 1);
  CHECK(ordered.rate == 1.0);

  // The most similar band node is now the farthest.
  const RateResult violated = smoothness_coherence_rate(unit_rows(angled_rows(1.9, 0.6, 1.4)), sim, p);
  CHECK(violated.usable_queries == 1);
  CHECK(violated.rate == 0.0);
}

TEST_CASE("constant embeddings tie everywhere and score zero") {
  const SimilarityMatrix sim = SimilarityMatrix::dense({RelationKind::Attr}, banded_similarity());
  EmbeddingMatrix z;
  z.values = Eigen::MatrixXd::Ones(24, 2);
  const EmbeddingMatrix constant = normalize_rows(z);
  CoherenceParams p;
  p.seed = 3;
  p.n_null_shuffles = 5;
  CHECK(smoothness_coherence_rate(constant, sim, p).rate == 0.0);
  CHECK(smoothness_null_bound(constant, sim, p) == 0.0);
}

TEST_CASE("null bound with a single shuffle is that shuffle's rate") {
  const Graph g = sbm_graph({.nodes = 40, .seed = 77});
  const SimilarityMatrix sim = compute_similarity(g, {RelationKind::Attr});
  const EmbeddingMatrix z = normalize_rows(demo_rp_embedding(g, 8, 5));
  CoherenceParams p;
  p.seed = 9;
  p.n_null_shuffles = 1;
  const double bound = smoothness_null_bound(z, sim, p);
  const EmbeddingMatrix shuffled = shuffle_embedding(z, p.seed + 1);
  const double direct = smoothness_coherence_rate(shuffled, sim, p).rate;
  CHECK(bound == direct);
}

TEST_CASE("aggregate and model score") {
  CHECK(coherence_rate(0.4, 0.6) == doctest::Approx(0.5));
  CHECK(coherence_rate(1.0, 1.0) == 1.0);
  CHECK(coherence_rate(0.0, 0.0) == 0.0);
  CHECK_THROWS_AS(coherence_rate(-0.1, 0.5), Error);

  const std::map<std::string, double> rates{{"a", 0.2}, {"b", 0.8}};
  CHECK(model_coherence_score(rates) == doctest::Approx(0.5));
  CHECK(model_coherence_score(rates, std::map<std::string, double>{{"a", 0.5}, {"b", 0.5}}) ==
        doctest::Approx(0.5));
  CHECK(model_coherence_score({{"a", 1.0}, {"b", 1.0}, {"c", 1.0}}) == doctest::Approx(1.0));

  SUBCASE("weights off the simplex are a constraint error") {
    try {
      model_coherence_score(rates, std::map<std::string, double>{{"a", 0.7}, {"b", 0.7}});
      FAIL("expected a constraint error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Constraint);
    }
  }
  SUBCASE("mismatched relation sets are a reference error") {
    CHECK_THROWS_AS(model_coherence_score(rates, std::map<std::string, double>{{"a", 1.0}}), Error);
  }
}

TEST_CASE("parameter validation") {
  CoherenceParams p;
  p.c = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.eta_i_percentile = 80;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.k_bands = 1;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.n_null_shuffles = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("shuffled embeddings respect the Cantelli bound on average") {
  const Graph g = sbm_graph({.nodes = 60, .seed = 101});
  const SimilarityMatrix sim = compute_similarity(g, {RelationKind::Attr});
  const EmbeddingMatrix base = normalize_rows(generate_evd_embedding(sim, 60));
  for (double c : {1.0, 1.64}) {
    CoherenceParams p;
    p.c = c;
    double total = 0.0;
    const int seeds = 10;
    for (int i = 0; i < seeds; ++i) {
      const EmbeddingMatrix shuffled = shuffle_embedding(base, 1000 + i);
      p.seed = 2000 + i;
      total += clustering_coherence_rate(shuffled, sim, p).rate;
    }
    CHECK(total / seeds <= clustering_null_bound(c) + 0.1);
  }
}

TEST_CASE("a relation with no usable component reports zero and stays insignificant") {
  const Graph g = sbm_graph({.nodes = 30, .seed = 44});
  // Identity similarity: every row has no positive off-diagonal value, so
  // both components skip every query.
  const SimilarityMatrix degenerate =
      SimilarityMatrix::dense({RelationKind::Attr}, Eigen::MatrixXd::Identity(30, 30));
  const SimilarityMatrix spd = compute_similarity(g, {RelationKind::Spd});
  const EmbeddingMatrix z = demo_rp_embedding(g, 8, 2);
  CoherenceParams p;
  p.seed = 6;
  p.n_null_shuffles = 5;

  const CoherenceReport report = interpret_embedding("demo", z, {&degenerate, &spd}, p);
  const RelationCoherence& entry = report.relations.at(0);
  CHECK_FALSE(entry.clustering_usable);
  CHECK_FALSE(entry.smoothness_usable);
  CHECK(entry.aggregate == 0.0);
  CHECK_FALSE(entry.significant);
  CHECK(entry.usable_query_fraction == 0.0);
  CHECK_THROWS_AS(nci_score(z, degenerate, p), Error);
}

TEST_CASE("interpret report is deterministic, serial or parallel") {
  const Graph g = sbm_graph({.nodes = 50, .seed = 55});
  const SimilarityMatrix attr = compute_similarity(g, {RelationKind::Attr});
  const SimilarityMatrix spd = compute_similarity(g, {RelationKind::Spd});
  const EmbeddingMatrix z = demo_rp_embedding(g, 12, 3);
  CoherenceParams p;
  p.seed = 4;
  p.n_null_shuffles = 10;

  const std::vector<const SimilarityMatrix*> rels{&attr, &spd};
  set_thread_count(1);
  const std::string serial = interpret_embedding("demo", z, rels, p).to_json().dump();
  set_thread_count(4);
  const std::string parallel = interpret_embedding("demo", z, rels, p).to_json().dump();
  set_thread_count(0);
  CHECK(serial == parallel);
}

TEST_CASE("query-restricted similarity blocks reproduce the full-matrix rates") {
  const Graph g = sbm_graph({.nodes = 60, .blocks = 3, .p_in = 0.4, .p_out = 0.05, .seed = 66});
  CoherenceParams p;
  p.seed = 12;
  p.query_fraction = 0.4;
  const EmbeddingMatrix z = normalize_rows(demo_rp_embedding(g, 10, 8));
  const std::vector<int> queries = coherence_query_set(g.node_count(), p);

  for (RelationKind kind : {RelationKind::Spd, RelationKind::Attr, RelationKind::PageRank}) {
    const SimilarityMatrix full = compute_similarity(g, {kind});
    const SimilarityMatrix block = compute_similarity_rows(g, {kind}, queries);
    const RateResult full_clu = clustering_coherence_rate(z, full, p);
    const RateResult block_clu = clustering_coherence_rate(z, block, p);
    CHECK(full_clu.rate == block_clu.rate);
    CHECK(full_clu.usable_queries == block_clu.usable_queries);
    CHECK(nci_score(z, full, p) == nci_score(z, block, p));
  }
}

TEST_CASE("smoothness null calibration approaches 1/k! for k in {2, 3, 4}") {
  SbmOptions opt;
  opt.nodes = 300;
  opt.blocks = 3;
  opt.p_in = 0.12;
  opt.p_out = 0.015;
  opt.seed = 71;
  const Graph g = sbm_graph(opt);
  const SimilarityMatrix attr = compute_similarity(g, {RelationKind::Attr});
  const EmbeddingMatrix base = demo_rp_embedding(g, 16, 2);

  for (int k : {2, 3, 4}) {
    CoherenceParams p;
    p.k_bands = k;
    p.seed = 50 + k;
    double total = 0.0;
    int usable = 0;
    const int shuffles = 30;
    for (int i = 0; i < shuffles; ++i) {
      const EmbeddingMatrix shuffled = shuffle_embedding(base, 900 + 40 * k + i);
      const RateResult r = smoothness_coherence_rate(shuffled, attr, p);
      total += r.rate;
      usable = r.usable_queries;
    }
    double expected = 1.0;
    for (int i = 2; i <= k; ++i) expected /= i;
    CHECK(usable > 100);
    CHECK(std::abs(total / shuffles - expected) < 0.05);
  }
}

TEST_CASE("adding isotropic noise to a most-expressive embedding never helps") {
  const Graph g = sbm_graph({.nodes = 80, .seed = 61});
  const SimilarityMatrix sim = compute_similarity(g, {RelationKind::Attr});
  const EmbeddingMatrix base = generate_evd_embedding(sim, 80);
  CoherenceParams p;
  p.seed = 8;

  double previous_clu = 1.1, previous_smo = 1.1;
  Rng rng = Rng::substream(17, "noise");
  for (double scale : {0.0, 0.05, 0.3, 1.5}) {
    EmbeddingMatrix noisy = base;
    for (int u = 0; u < noisy.rows(); ++u) {
      for (int j = 0; j < noisy.dim(); ++j) noisy.values(u, j) += scale * normal_sample(rng);
    }
    const EmbeddingMatrix z = normalize_rows(noisy);
    const RateResult clu = clustering_coherence_rate(z, sim, p);
    const RateResult smo = smoothness_coherence_rate(z, sim, p);
    // Two standard errors of slack on each comparison.
    const double clu_se = std::sqrt(0.25 / static_cast<double>(clu.pairs_used));
    const double smo_se = std::sqrt(0.25 / static_cast<double>(smo.usable_queries));
    CHECK(clu.rate <= previous_clu + 2.0 * clu_se);
    CHECK(smo.rate <= previous_smo + 2.0 * smo_se);
    previous_clu = clu.rate;
    previous_smo = smo.rate;
  }
}

}  // TEST_SUITE
