#include "nci/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "nci/error.hpp"
#include "nci/parallel.hpp"
#include "nci/stats.hpp"

namespace nci {

namespace {

constexpr double kDistanceTie = 1e-12;

constexpr const char* kSkipNoSimilarityValues = "empty_similarity_distribution";
constexpr const char* kSkipEmptySimilar = "empty_similar_set";
constexpr const char* kSkipEmptyIntruder = "empty_intruder_set";
constexpr const char* kSkipEmptyBand = "empty_band";

// Per-query thresholds come from the distribution of the query's positive
// similarity values (self excluded). Zero similarity means the relation is
// absent for the pair; such nodes are natural intruders but do not shape
// the thresholds.
struct QueryThresholds {
  bool ok = false;
  double eta_s = 0.0;
  double eta_i = 0.0;
};

QueryThresholds query_thresholds(const SimilarityMatrix::SparseRow& positives, const CoherenceParams& p) {
  QueryThresholds t;
  if (positives.empty()) return t;
  std::vector<double> values;
  values.reserve(positives.size());
  for (const auto& [v, sv] : positives) values.push_back(sv);
  std::sort(values.begin(), values.end());
  t.eta_s = percentile_sorted(values, p.eta_s_percentile);
  t.eta_i = percentile_sorted(values, p.eta_i_percentile);
  t.ok = true;
  return t;
}

struct ClusterSets {
  const char* skip = nullptr;
  std::vector<int> similar;
  std::vector<int> intruders;
};

ClusterSets build_cluster_sets(const SimilarityMatrix& s, int query, const CoherenceParams& p) {
  ClusterSets sets;
  const auto positives = s.positive_row(query);
  const QueryThresholds t = query_thresholds(positives, p);
  if (!t.ok) {
    sets.skip = kSkipNoSimilarityValues;
    return sets;
  }

  // Nodes at or above eta_i are excluded from the intruder set; everything
  // else (including all zero-similarity nodes) is an intruder.
  std::vector<bool> above_eta_i(static_cast<std::size_t>(s.size()), false);
  for (const auto& [v, sv] : positives) {
    if (sv >= t.eta_s) sets.similar.push_back(v);
    if (sv >= t.eta_i) above_eta_i[static_cast<std::size_t>(v)] = true;
  }
  for (int v = 0; v < s.size(); ++v) {
    if (v == query || above_eta_i[static_cast<std::size_t>(v)]) continue;
    sets.intruders.push_back(v);
  }

  if (sets.similar.empty()) {
    sets.skip = kSkipEmptySimilar;
  } else if (sets.intruders.empty()) {
    sets.skip = kSkipEmptyIntruder;
  }
  return sets;
}

struct BandOutcome {
  const char* skip = nullptr;
  std::vector<int> nodes;
};

BandOutcome bands_for_query(const SimilarityMatrix& s, int query, const CoherenceParams& p, Rng& rng) {
  BandOutcome out;
  const auto positives = s.positive_row(query);
  const QueryThresholds t = query_thresholds(positives, p);
  if (!t.ok) {
    out.skip = kSkipNoSimilarityValues;
    return out;
  }
  auto bands = build_similar_bands(s, query, t.eta_s, p, rng);
  if (!bands) {
    out.skip = kSkipEmptyBand;
    return out;
  }
  out.nodes = std::move(*bands);
  return out;
}

void require_normalized(const EmbeddingMatrix& z, const char* op) {
  if (!z.normalized) {
    fail(ErrorKind::Parameter, std::string(op) + " expects a row-normalized embedding");
  }
}

double embedding_sigma(const EmbeddingMatrix& z, const CoherenceParams& p) {
  return distance_std(z, p.distance_sample, p.seed);
}

RateResult smoothness_from_bands(const EmbeddingMatrix& z, const std::vector<BandOutcome>& bands,
                                 const std::vector<int>& queries, const std::string& relation) {
  RateResult result;
  result.total_queries = static_cast<int>(queries.size());
  long hits = 0;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const BandOutcome& band = bands[qi];
    if (band.skip != nullptr) {
      ++result.skip_reasons[band.skip];
      continue;
    }
    ++result.usable_queries;
    ++result.pairs_used;
    const int u = queries[qi];
    bool ordered = true;
    double prev = pairwise_distance(z, u, band.nodes.front());
    for (std::size_t i = 1; i < band.nodes.size(); ++i) {
      const double next = pairwise_distance(z, u, band.nodes[i]);
      if (next - prev <= kDistanceTie) {  // ties count as violations
        ordered = false;
        break;
      }
      prev = next;
    }
    if (ordered) ++hits;
  }
  if (result.usable_queries == 0) {
    fail(ErrorKind::Degenerate,
         "smoothness coherence degenerate for relation '" + relation + "': every query node was skipped");
  }
  result.rate = static_cast<double>(hits) / static_cast<double>(result.usable_queries);
  return result;
}

std::vector<BandOutcome> collect_bands(const SimilarityMatrix& s, const std::vector<int>& queries,
                                       const CoherenceParams& p) {
  const std::string tag = std::string("bands:") + s.spec().name();
  std::vector<BandOutcome> bands(queries.size());
  parallel_for(queries.size(), [&](std::size_t qi) {
    const int u = queries[qi];
    Rng rng = Rng::substream(p.seed, tag, static_cast<std::uint64_t>(u));
    bands[qi] = bands_for_query(s, u, p, rng);
  });
  return bands;
}

}  // namespace

std::vector<int> coherence_query_set(int n, const CoherenceParams& p) {
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  if (p.query_fraction >= 1.0) return all;
  const int keep = std::max(1, static_cast<int>(std::llround(p.query_fraction * n)));
  Rng rng = Rng::substream(p.seed, "query-sample");
  auto chosen = sample_without_replacement(n, keep, rng);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

void CoherenceParams::validate() const {
  if (!(c > 0.0)) fail(ErrorKind::Parameter, "margin multiplier c must be > 0");
  if (!(eta_i_percentile >= 0.0 && eta_i_percentile < eta_s_percentile && eta_s_percentile <= 100.0)) {
    fail(ErrorKind::Parameter, "percentiles must satisfy 0 <= eta_i < eta_s <= 100");
  }
  if (pairs_per_query < 1) fail(ErrorKind::Parameter, "K (pairs per query) must be >= 1");
  if (k_bands < 2) fail(ErrorKind::Parameter, "k_bands must be >= 2");
  if (!(query_fraction > 0.0 && query_fraction <= 1.0)) {
    fail(ErrorKind::Parameter, "query_fraction must be in (0, 1]");
  }
  if (n_null_shuffles < 1) fail(ErrorKind::Parameter, "n_null_shuffles must be >= 1");
  if (distance_sample < 2) fail(ErrorKind::Parameter, "distance_sample must be >= 2");
  if (pair_sample < 2) fail(ErrorKind::Parameter, "pair_sample must be >= 2");
}

nlohmann::json CoherenceParams::to_json() const {
  return nlohmann::json{{"c", c},
                        {"eta_s_percentile", eta_s_percentile},
                        {"eta_i_percentile", eta_i_percentile},
                        {"K", pairs_per_query},
                        {"k_bands", k_bands},
                        {"query_fraction", query_fraction},
                        {"n_null_shuffles", n_null_shuffles},
                        {"seed", seed},
                        {"distance_sample", distance_sample},
                        {"pair_sample", pair_sample}};
}

CoherenceParams CoherenceParams::from_json(const nlohmann::json& j) {
  CoherenceParams p;
  if (j.contains("c")) p.c = j.at("c").get<double>();
  if (j.contains("eta_s_percentile")) p.eta_s_percentile = j.at("eta_s_percentile").get<double>();
  if (j.contains("eta_i_percentile")) p.eta_i_percentile = j.at("eta_i_percentile").get<double>();
  if (j.contains("K")) p.pairs_per_query = j.at("K").get<int>();
  if (j.contains("k_bands")) p.k_bands = j.at("k_bands").get<int>();
  if (j.contains("query_fraction")) p.query_fraction = j.at("query_fraction").get<double>();
  if (j.contains("n_null_shuffles")) p.n_null_shuffles = j.at("n_null_shuffles").get<int>();
  if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("distance_sample")) p.distance_sample = j.at("distance_sample").get<std::size_t>();
  if (j.contains("pair_sample")) p.pair_sample = j.at("pair_sample").get<std::size_t>();
  p.validate();
  return p;
}

double clustering_null_bound(double c) {
  if (c < 0.0) fail(ErrorKind::Parameter, "margin multiplier c must be >= 0");
  return 2.0 / (2.0 + c * c);
}

RateResult clustering_coherence_rate(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                                     const CoherenceParams& p) {
  p.validate();
  require_normalized(z, "clustering_coherence_rate");
  if (z.rows() != s.size()) fail(ErrorKind::Validation, "embedding and similarity sizes differ");

  const double margin = p.c * embedding_sigma(z, p);
  const std::vector<int> queries = coherence_query_set(s.size(), p);
  const std::string tag = std::string("clustering:") + s.spec().name();

  struct PerQuery {
    const char* skip = nullptr;
    int used = 0;
    int passed = 0;
  };
  std::vector<PerQuery> partials(queries.size());

  parallel_for(queries.size(), [&](std::size_t qi) {
    const int u = queries[qi];
    PerQuery& out = partials[qi];
    const ClusterSets sets = build_cluster_sets(s, u, p);
    if (sets.skip != nullptr) {
      out.skip = sets.skip;
      return;
    }
    Rng rng = Rng::substream(p.seed, tag, static_cast<std::uint64_t>(u));

    // Sample K distinct pairs from the similar x intruder product without
    // replacement; when fewer exist, use them all.
    const std::uint64_t total =
        static_cast<std::uint64_t>(sets.similar.size()) * static_cast<std::uint64_t>(sets.intruders.size());
    const std::uint64_t take = std::min<std::uint64_t>(total, static_cast<std::uint64_t>(p.pairs_per_query));
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(static_cast<std::size_t>(take) * 2);
    while (seen.size() < take) {
      const std::uint64_t code = rng.bounded(total);
      if (!seen.insert(code).second) continue;
      const int vs = sets.similar[static_cast<std::size_t>(code / sets.intruders.size())];
      const int vi = sets.intruders[static_cast<std::size_t>(code % sets.intruders.size())];
      ++out.used;
      if (pairwise_distance(z, u, vi) - pairwise_distance(z, u, vs) >= margin) ++out.passed;
    }
  });

  RateResult result;
  result.total_queries = static_cast<int>(queries.size());
  long passed = 0;
  for (const PerQuery& part : partials) {
    if (part.skip != nullptr) {
      ++result.skip_reasons[part.skip];
      continue;
    }
    ++result.usable_queries;
    result.pairs_used += part.used;
    passed += part.passed;
  }
  if (result.usable_queries == 0 || result.pairs_used == 0) {
    fail(ErrorKind::Degenerate, "clustering coherence degenerate for relation '" + s.spec().name() +
                                    "': every query node was skipped");
  }
  result.rate = static_cast<double>(passed) / static_cast<double>(result.pairs_used);
  return result;
}

std::optional<std::vector<int>> build_similar_bands(const SimilarityMatrix& s, int query,
                                                    double eta_s, const CoherenceParams& p, Rng& rng) {
  const int k = p.k_bands;
  // eta_0 = 1, eta_i = ((k - i) / k) (1 - eta_s) + eta_s; band i covers the
  // half-open interval [eta_i, eta_{i-1}), so exact-boundary values land in
  // the higher-similarity band.
  std::vector<double> thresholds(static_cast<std::size_t>(k) + 1);
  thresholds[0] = 1.0;
  for (int i = 1; i <= k; ++i) {
    thresholds[static_cast<std::size_t>(i)] =
        (static_cast<double>(k - i) / static_cast<double>(k)) * (1.0 - eta_s) + eta_s;
  }

  const auto positives = s.positive_row(query);
  std::vector<std::vector<int>> candidates(static_cast<std::size_t>(k));
  for (const auto& [v, sv] : positives) {
    if (sv < thresholds[static_cast<std::size_t>(k)] || sv >= 1.0) continue;
    // Linear scan; k is tiny (3 by default).
    for (int i = 1; i <= k; ++i) {
      if (sv >= thresholds[static_cast<std::size_t>(i)] && sv < thresholds[static_cast<std::size_t>(i) - 1]) {
        candidates[static_cast<std::size_t>(i) - 1].push_back(v);
        break;
      }
    }
  }

  std::vector<int> picks(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto& bucket = candidates[static_cast<std::size_t>(i)];
    if (bucket.empty()) return std::nullopt;
    picks[static_cast<std::size_t>(i)] = bucket[static_cast<std::size_t>(rng.bounded(bucket.size()))];
  }
  return picks;
}

RateResult smoothness_coherence_rate(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                                     const CoherenceParams& p) {
  p.validate();
  require_normalized(z, "smoothness_coherence_rate");
  if (z.rows() != s.size()) fail(ErrorKind::Validation, "embedding and similarity sizes differ");
  const std::vector<int> queries = coherence_query_set(s.size(), p);
  const std::vector<BandOutcome> bands = collect_bands(s, queries, p);
  return smoothness_from_bands(z, bands, queries, s.spec().name());
}

double smoothness_null_bound(const EmbeddingMatrix& z, const SimilarityMatrix& s,
                             const CoherenceParams& p) {
  p.validate();
  require_normalized(z, "smoothness_null_bound");
  const std::vector<int> queries = coherence_query_set(s.size(), p);
  const std::vector<BandOutcome> bands = collect_bands(s, queries, p);

  std::vector<double> rates(static_cast<std::size_t>(p.n_null_shuffles));
  parallel_for(rates.size(), [&](std::size_t i) {
    const EmbeddingMatrix shuffled = shuffle_embedding(z, p.seed + 1 + static_cast<std::uint64_t>(i));
    rates[i] = smoothness_from_bands(shuffled, bands, queries, s.spec().name()).rate;
  });
  std::sort(rates.begin(), rates.end());
  return percentile_sorted(rates, 95.0);
}

double coherence_rate(double clustering, double smoothness) {
  if (clustering < 0.0 || clustering > 1.0 || smoothness < 0.0 || smoothness > 1.0) {
    fail(ErrorKind::Parameter, "coherence rates must lie in [0, 1]");
  }
  return 0.5 * (clustering + smoothness);
}

double model_coherence_score(const std::map<std::string, double>& rates,
                             const std::optional<std::map<std::string, double>>& weights) {
  if (rates.empty()) fail(ErrorKind::Parameter, "model coherence score needs at least one relation");
  if (!weights) {
    double acc = 0.0;
    for (const auto& [name, rate] : rates) acc += rate;
    return acc / static_cast<double>(rates.size());
  }
  if (weights->size() != rates.size()) {
    fail(ErrorKind::Reference, "weight set does not match relation set");
  }
  double total = 0.0;
  double acc = 0.0;
  for (const auto& [name, w] : *weights) {
    auto it = rates.find(name);
    if (it == rates.end()) fail(ErrorKind::Reference, "weight for unknown relation '" + name + "'");
    if (w < 0.0) fail(ErrorKind::Constraint, "relation weights must be nonnegative");
    total += w;
    acc += w * it->second;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorKind::Constraint, "relation weights must sum to 1");
  }
  return acc;
}

ComponentUsability component_usability(const SimilarityMatrix& s, const CoherenceParams& p) {
  p.validate();
  const std::vector<int> queries = coherence_query_set(s.size(), p);
  ComponentUsability usability;
  const std::string tag = std::string("bands:") + s.spec().name();
  for (int u : queries) {
    if (!usability.clustering) {
      const ClusterSets sets = build_cluster_sets(s, u, p);
      if (sets.skip == nullptr) usability.clustering = true;
    }
    if (!usability.smoothness) {
      Rng rng = Rng::substream(p.seed, tag, static_cast<std::uint64_t>(u));
      if (bands_for_query(s, u, p, rng).skip == nullptr) usability.smoothness = true;
    }
    if (usability.clustering && usability.smoothness) break;
  }
  return usability;
}

double nci_score(const EmbeddingMatrix& z, const SimilarityMatrix& s, const CoherenceParams& p) {
  std::optional<double> clustering;
  std::optional<double> smoothness;
  try {
    clustering = clustering_coherence_rate(z, s, p).rate;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Degenerate) throw;
  }
  try {
    smoothness = smoothness_coherence_rate(z, s, p).rate;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Degenerate) throw;
  }
  if (clustering && smoothness) return coherence_rate(*clustering, *smoothness);
  if (clustering) return *clustering;
  if (smoothness) return *smoothness;
  fail(ErrorKind::Degenerate,
       "relation '" + s.spec().name() + "' has no usable query for either coherence component");
}

CoherenceReport interpret_embedding(const std::string& model_name, const EmbeddingMatrix& z,
                                    const std::vector<const SimilarityMatrix*>& relations,
                                    const CoherenceParams& p,
                                    const std::optional<std::map<std::string, double>>& weights) {
  p.validate();
  const EmbeddingMatrix normalized = z.normalized ? z : normalize_rows(z);

  CoherenceReport report;
  report.model = model_name;
  report.params = p;
  report.zero_rows = normalized.zero_row_count;

  std::map<std::string, double> rates;
  for (const SimilarityMatrix* s : relations) {
    RelationCoherence entry;
    entry.name = s->spec().name();
    entry.clustering_bound = clustering_null_bound(p.c);

    std::optional<RateResult> clustering;
    std::optional<RateResult> smoothness;
    try {
      clustering = clustering_coherence_rate(normalized, *s, p);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Degenerate) throw;
    }
    try {
      smoothness = smoothness_coherence_rate(normalized, *s, p);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Degenerate) throw;
    }

    double usable_fraction = 0.0;
    if (clustering) {
      entry.clustering_usable = true;
      entry.clustering_rate = clustering->rate;
      usable_fraction = clustering->usable_fraction();
      for (const auto& [reason, count] : clustering->skip_reasons) {
        entry.skip_reasons["clustering_" + reason] += count;
      }
    }
    if (smoothness) {
      entry.smoothness_usable = true;
      entry.smoothness_rate = smoothness->rate;
      entry.smoothness_bound = smoothness_null_bound(normalized, *s, p);
      usable_fraction = clustering ? std::min(usable_fraction, smoothness->usable_fraction())
                                   : smoothness->usable_fraction();
      for (const auto& [reason, count] : smoothness->skip_reasons) {
        entry.skip_reasons["smoothness_" + reason] += count;
      }
    }
    entry.usable_query_fraction = usable_fraction;

    if (clustering && smoothness) {
      entry.aggregate = coherence_rate(entry.clustering_rate, entry.smoothness_rate);
      entry.significant = entry.clustering_rate > entry.clustering_bound &&
                          entry.smoothness_rate > entry.smoothness_bound;
    } else if (clustering) {
      entry.aggregate = entry.clustering_rate;
      entry.significant = entry.clustering_rate > entry.clustering_bound;
    } else if (smoothness) {
      entry.aggregate = entry.smoothness_rate;
      entry.significant = entry.smoothness_rate > entry.smoothness_bound;
    } else {
      entry.aggregate = 0.0;
      entry.significant = false;
    }

    rates[entry.name] = entry.aggregate;
    report.relations.push_back(std::move(entry));
  }

  report.model_score = model_coherence_score(rates, weights);
  return report;
}

nlohmann::json CoherenceReport::to_json() const {
  nlohmann::json rels = nlohmann::json::array();
  for (const auto& r : relations) {
    nlohmann::json skips = nlohmann::json::object();
    for (const auto& [reason, count] : r.skip_reasons) skips[reason] = count;
    rels.push_back(nlohmann::json{{"name", r.name},
                                  {"clustering_rate", r.clustering_rate},
                                  {"clustering_bound", r.clustering_bound},
                                  {"clustering_usable", r.clustering_usable},
                                  {"smoothness_rate", r.smoothness_rate},
                                  {"smoothness_bound", r.smoothness_bound},
                                  {"smoothness_usable", r.smoothness_usable},
                                  {"coherence_rate", r.aggregate},
                                  {"significant", r.significant},
                                  {"usable_query_fraction", r.usable_query_fraction},
                                  {"skipped", skips}});
  }
  return nlohmann::json{{"model", model},
                        {"params", params.to_json()},
                        {"relations", rels},
                        {"model_coherence_score", model_score},
                        {"zero_rows", zero_rows}};
}

}  // namespace nci
