#include <doctest.h>

#include <cmath>
#include <vector>

#include "nci/error.hpp"
#include "nci/ime.hpp"
#include "support/test_graphs.hpp"

using namespace nci;
using namespace nci::testing;

TEST_SUITE("ime") {

TEST_CASE("pearson correlation") {
  const std::vector<double> xs{1, 2, 3, 4};
  std::vector<double> ys{3, 5, 7, 9};  // 2x + 1
  CHECK(pearson_correlation(xs, ys) == doctest::Approx(1.0));
  ys = {-1, -2, -3, -4};
  CHECK(pearson_correlation(xs, ys) == doctest::Approx(-1.0));
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{1, 3, 2};
  CHECK(pearson_correlation(a, b) == doctest::Approx(0.5));

  SUBCASE("zero variance is an undefined-correlation error") {
    const std::vector<double> constant{2, 2, 2};
    try {
      pearson_correlation(constant, a);
      FAIL("expected an undefined-correlation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UndefinedCorrelation);
    }
  }
  SUBCASE("length mismatch is a parameter error") {
    CHECK_THROWS_AS(pearson_correlation(a, xs), Error);
  }
}

TEST_CASE("full-dimension evaluation ranks every generating relation first") {
  const Graph g = sbm_graph({.nodes = 64, .blocks = 4, .p_in = 0.35, .p_out = 0.03, .seed = 13});
  const std::vector<RelationSpec> relations{{RelationKind::Spd}, {RelationKind::Attr},
                                            {RelationKind::LabelDist}};
  CoherenceParams p;
  p.seed = 19;
  const ImeResult result = run_ime(g, relations, g.node_count(), Method::Nci, p);
  CHECK(result.mrr == 1.0);
  for (const auto& target : result.per_target) CHECK(target.rank == 1);
  CHECK(result.expressiveness == doctest::Approx(1.0));
}

TEST_CASE("mrr stays within its bounds and reciprocal-rank arithmetic holds") {
  const Graph g = sbm_graph({.nodes = 48, .blocks = 3, .seed = 23});
  const std::vector<RelationSpec> relations{{RelationKind::Spd}, {RelationKind::Attr},
                                            {RelationKind::DegreeDist}};
  CoherenceParams p;
  p.seed = 31;
  const ImeResult result = run_ime(g, relations, 12, Method::KendallTau, p);
  const double lower = 1.0 / static_cast<double>(result.per_target.size());
  CHECK(result.mrr >= lower);
  CHECK(result.mrr <= 1.0);
  double expected = 0.0;
  for (const auto& target : result.per_target) expected += 1.0 / target.rank;
  expected /= static_cast<double>(result.per_target.size());
  CHECK(result.mrr == doctest::Approx(expected));
}

TEST_CASE("similarity caching does not change results") {
  const Graph g = sbm_graph({.nodes = 40, .blocks = 4, .seed = 29});
  const std::vector<RelationSpec> relations{{RelationKind::Spd}, {RelationKind::Attr}};
  CoherenceParams p;
  p.seed = 37;

  const ImeResult uncached = run_ime(g, relations, 20, Method::Nci, p);

  TempDir dir("ime_cache");
  SimilarityCache cache(g, dir.file("cache"));
  const ImeResult cold = run_ime(g, relations, 20, Method::Nci, p, &cache);
  SimilarityCache warm_cache(g, dir.file("cache"));
  const ImeResult warm = run_ime(g, relations, 20, Method::Nci, p, &warm_cache);
  CHECK(warm_cache.last_was_disk_hit("spd"));

  CHECK(uncached.to_json().dump() == cold.to_json().dump());
  CHECK(uncached.to_json().dump() == warm.to_json().dump());
}

TEST_CASE("a sweep with one dimension reduces to a single run") {
  const Graph g = sbm_graph({.nodes = 40, .blocks = 4, .seed = 41});
  const std::vector<RelationSpec> relations{{RelationKind::Spd}, {RelationKind::Attr}};
  CoherenceParams p;
  p.seed = 43;
  const auto sweep = expressiveness_sweep(g, relations, {40}, {Method::Nci}, p);
  REQUIRE(sweep.size() == 1);
  const ImeResult single = run_ime(g, relations, 40, Method::Nci, p);
  CHECK(sweep[0].to_json().dump() == single.to_json().dump());
}

TEST_CASE("sweep points agree with individual runs at each dimension") {
  const Graph g = sbm_graph({.nodes = 36, .blocks = 3, .seed = 47});
  const std::vector<RelationSpec> relations{{RelationKind::Spd}, {RelationKind::Attr}};
  CoherenceParams p;
  p.seed = 53;
  const auto sweep = expressiveness_sweep(g, relations, {6, 18, 36}, {Method::KendallTau}, p);
  REQUIRE(sweep.size() == 3);
  for (const auto& point : sweep) {
    const ImeResult direct = run_ime(g, relations, point.d, Method::KendallTau, p);
    CHECK(point.to_json().dump() == direct.to_json().dump());
  }
}

TEST_CASE("validation errors") {
  const Graph g = sbm_graph({.nodes = 20, .seed = 59});
  CoherenceParams p;
  p.seed = 61;
  SUBCASE("fewer than two relations") {
    CHECK_THROWS_AS(run_ime(g, {{RelationKind::Spd}}, 10, Method::Nci, p), Error);
  }
  SUBCASE("dimension out of range") {
    const std::vector<RelationSpec> relations{{RelationKind::Spd}, {RelationKind::Attr}};
    CHECK_THROWS_AS(run_ime(g, relations, 0, Method::Nci, p), Error);
    CHECK_THROWS_AS(run_ime(g, relations, 21, Method::Nci, p), Error);
  }
  SUBCASE("unsorted sweep dimensions") {
    const std::vector<RelationSpec> relations{{RelationKind::Spd}, {RelationKind::Attr}};
    CHECK_THROWS_AS(expressiveness_sweep(g, relations, {10, 5}, {Method::Nci}, p), Error);
  }
  SUBCASE("scoring errors carry the failing cell") {
    const std::vector<RelationSpec> relations{{RelationKind::Spd}, {RelationKind::LabelDist}};
    const Graph no_labels = path_graph(12);
    try {
      run_ime(no_labels, relations, 4, Method::Nci, p);
      FAIL("expected a capability error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Capability);
    }
  }
}

}  // TEST_SUITE
