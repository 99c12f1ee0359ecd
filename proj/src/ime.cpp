#include "nci/ime.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "nci/baselines.hpp"
#include "nci/error.hpp"

namespace nci {

const char* to_string(Method m) {
  switch (m) {
    case Method::Nci: return "nci";
    case Method::KendallTau: return "kendall_tau";
    case Method::PropertyClass: return "property_class";
  }
  return "unknown";
}

Method method_from_string(const std::string& token) {
  if (token == "nci") return Method::Nci;
  if (token == "kendall_tau") return Method::KendallTau;
  if (token == "property_class") return Method::PropertyClass;
  fail(ErrorKind::Parameter, "unknown interpretation method: " + token);
}

double interpretation_score(Method method, const EmbeddingMatrix& z, const SimilarityMatrix& s,
                            const CoherenceParams& p) {
  switch (method) {
    case Method::Nci: return nci_score(z, s, p);
    case Method::KendallTau: return kendall_tau_score(z, s, p.pair_sample, p.seed);
    case Method::PropertyClass: return property_classification_score(z, s, p);
  }
  fail(ErrorKind::Internal, "unhandled interpretation method");
}

SimilarityCache::SimilarityCache(const Graph& g, std::optional<std::string> disk_dir)
    : graph_(&g), disk_dir_(std::move(disk_dir)) {
  if (disk_dir_) std::filesystem::create_directories(*disk_dir_);
}

std::string SimilarityCache::disk_path(const RelationSpec& spec) const {
  if (!disk_dir_) return {};
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(graph_->content_hash()));
  return (std::filesystem::path(*disk_dir_) / ("sim_" + std::string(hash) + "_" + spec.name() + ".csv"))
      .string();
}

const SimilarityMatrix& SimilarityCache::get(const RelationSpec& spec) {
  std::lock_guard<std::mutex> lock(mutex_);
  const std::string key = spec.name();
  auto it = entries_.find(key);
  if (it != entries_.end()) return *it->second;

  spec.validate(*graph_);
  if (disk_dir_) {
    const std::string path = disk_path(spec);
    if (std::filesystem::exists(path)) {
      auto loaded = std::make_unique<SimilarityMatrix>(load_similarity(path));
      if (loaded->size() == graph_->node_count()) {
        disk_hits_[key] = true;
        return *entries_.emplace(key, std::move(loaded)).first->second;
      }
    }
    auto computed = std::make_unique<SimilarityMatrix>(compute_similarity(*graph_, spec));
    save_similarity(*computed, path);
    disk_hits_[key] = false;
    return *entries_.emplace(key, std::move(computed)).first->second;
  }
  auto computed = std::make_unique<SimilarityMatrix>(compute_similarity(*graph_, spec));
  disk_hits_[key] = false;
  return *entries_.emplace(key, std::move(computed)).first->second;
}

bool SimilarityCache::last_was_disk_hit(const std::string& name) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = disk_hits_.find(name);
  return it != disk_hits_.end() && it->second;
}

nlohmann::json ImeResult::to_json() const {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& t : per_target) {
    nlohmann::json scores = nlohmann::json::object();
    for (const auto& [name, value] : t.scores) scores[name] = value;
    targets.push_back(nlohmann::json{{"target", t.target},
                                     {"scores", scores},
                                     {"rank", t.rank},
                                     {"reciprocal_rank", 1.0 / static_cast<double>(t.rank)},
                                     {"tied", t.tied},
                                     {"clamp_fraction", t.clamp_fraction}});
  }
  return nlohmann::json{{"method", to_string(method)}, {"d", d},
                        {"expressiveness", expressiveness}, {"per_target", targets},
                        {"mrr", mrr},       {"seed", seed},
                        {"params", params.to_json()},
                        {"excluded_relations", excluded_relations}};
}

namespace {

struct SweepContext {
  std::vector<RelationSpec> relations;              // scoreable relations
  std::vector<const SimilarityMatrix*> matrices;    // aligned with relations
  std::vector<SpectralBasis> bases;                 // aligned with relations
  std::vector<std::string> excluded;
};

SweepContext prepare_context(const std::vector<RelationSpec>& requested, const CoherenceParams& p,
                             SimilarityCache& cache) {
  if (requested.size() < 2) fail(ErrorKind::Parameter, "the evaluation needs at least two relations");
  SweepContext ctx;
  for (const RelationSpec& spec : requested) {
    const SimilarityMatrix& s = cache.get(spec);
    // A relation with no usable query for either coherence component cannot
    // be scored; keep the relation set identical across methods so MRRs
    // stay comparable.
    if (!component_usability(s, p).any()) {
      ctx.excluded.push_back(spec.name());
      continue;
    }
    ctx.relations.push_back(spec);
    ctx.matrices.push_back(&s);
  }
  if (ctx.relations.size() < 2) {
    fail(ErrorKind::Degenerate, "fewer than two relations remain scoreable on this graph");
  }
  ctx.bases.reserve(ctx.relations.size());
  for (const SimilarityMatrix* s : ctx.matrices) ctx.bases.push_back(eigendecompose_similarity(*s));
  return ctx;
}

ImeResult evaluate_point(const Graph& g, const SweepContext& ctx, int d, Method method,
                         const CoherenceParams& p) {
  if (d < 1 || d > g.node_count()) {
    fail(ErrorKind::Parameter, "embedding dimension must be in [1, |V|], got " + std::to_string(d));
  }
  ImeResult result;
  result.method = method;
  result.d = d;
  result.expressiveness = static_cast<double>(d) / static_cast<double>(g.node_count());
  result.seed = p.seed;
  result.params = p;
  result.excluded_relations = ctx.excluded;

  for (std::size_t t = 0; t < ctx.relations.size(); ++t) {
    ImeTargetResult target;
    target.target = ctx.relations[t].name();
    target.clamp_fraction = ctx.bases[t].clamp_fraction;

    const EmbeddingMatrix z = normalize_rows(embedding_from_basis(ctx.bases[t], d));
    for (std::size_t j = 0; j < ctx.relations.size(); ++j) {
      try {
        target.scores[ctx.relations[j].name()] = interpretation_score(method, z, *ctx.matrices[j], p);
      } catch (const Error& e) {
        throw Error(e.kind(), "scoring cell (target=" + target.target +
                                  ", relation=" + ctx.relations[j].name() + "): " + e.what());
      }
    }

    const double own = target.scores.at(target.target);
    for (const auto& [name, score] : target.scores) {
      if (name == target.target) continue;
      if (score > own) ++target.rank;
      if (score == own) ++target.tied;
    }
    result.per_target.push_back(std::move(target));
  }

  double reciprocal_sum = 0.0;
  for (const auto& t : result.per_target) reciprocal_sum += 1.0 / static_cast<double>(t.rank);
  result.mrr = reciprocal_sum / static_cast<double>(result.per_target.size());
  return result;
}

}  // namespace

ImeResult run_ime(const Graph& g, const std::vector<RelationSpec>& relations, int d, Method method,
                  const CoherenceParams& p, SimilarityCache* cache) {
  p.validate();
  std::optional<SimilarityCache> local;
  if (cache == nullptr) {
    local.emplace(g);
    cache = &*local;
  }
  const SweepContext ctx = prepare_context(relations, p, *cache);
  return evaluate_point(g, ctx, d, method, p);
}

std::vector<ImeResult> expressiveness_sweep(const Graph& g, const std::vector<RelationSpec>& relations,
                                            const std::vector<int>& dims,
                                            const std::vector<Method>& methods,
                                            const CoherenceParams& p, SimilarityCache* cache) {
  p.validate();
  if (dims.empty()) fail(ErrorKind::Parameter, "dimension sweep needs at least one dimension");
  if (!std::is_sorted(dims.begin(), dims.end())) {
    fail(ErrorKind::Parameter, "sweep dimensions must be sorted ascending");
  }
  if (methods.empty()) fail(ErrorKind::Parameter, "dimension sweep needs at least one method");

  std::optional<SimilarityCache> local;
  if (cache == nullptr) {
    local.emplace(g);
    cache = &*local;
  }
  const SweepContext ctx = prepare_context(relations, p, *cache);

  std::vector<ImeResult> results;
  results.reserve(dims.size() * methods.size());
  for (Method method : methods) {
    for (int d : dims) results.push_back(evaluate_point(g, ctx, d, method, p));
  }
  return results;
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) fail(ErrorKind::Parameter, "pearson_correlation needs equal-length vectors");
  if (xs.size() < 2) fail(ErrorKind::Parameter, "pearson_correlation needs at least two observations");
  const double n = static_cast<double>(xs.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    fail(ErrorKind::UndefinedCorrelation, "pearson correlation undefined: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace nci
