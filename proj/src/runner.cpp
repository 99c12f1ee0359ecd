#include "nci/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nci/error.hpp"
#include "nci/graph.hpp"

namespace nci {

namespace fs = std::filesystem;

namespace {

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) fail(ErrorKind::Validation, what + " does not exist: " + path);
}

void write_text(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write file: " + path);
  out << text;
}

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

// Wall-clock info goes to a sidecar so the report files stay byte-identical
// across reruns of the same config.
void write_sidecar(const RunConfig& config, const std::string& command) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t stamp = std::chrono::system_clock::to_time_t(now);
  char text[128];
  std::strftime(text, sizeof(text), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&stamp));
  std::ostringstream body;
  body << "command: " << command << "\nfinished: " << text << "\n";
  write_text((fs::path(config.out_dir) / "run_info.txt").string(), body.str());
}

std::string hex64(std::uint64_t value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

Graph load_config_graph(const RunConfig& config) {
  return load_graph(config.edge_path, config.attr_path, config.label_path, config.directed_input);
}

std::vector<RelationSpec> resolve_relations(const RunConfig& config, const Graph& g) {
  if (!config.relations.empty()) {
    for (const auto& spec : config.relations) spec.validate(g);
    return config.relations;
  }
  std::vector<RelationSpec> all{{RelationKind::Link}, {RelationKind::Spd},
                                {RelationKind::PageRank}, {RelationKind::DegreeDist}};
  if (g.has_labels()) all.push_back({RelationKind::LabelDist});
  if (g.has_attributes()) {
    all.push_back({RelationKind::Attr});
    all.push_back({RelationKind::AttrDist});
  }
  return all;
}

nlohmann::json graph_json(const Graph& g) {
  return nlohmann::json{{"nodes", g.node_count()},
                        {"edges", g.edge_count()},
                        {"content_hash", hex64(g.content_hash())},
                        {"node_ids", g.node_ids()}};
}

EmbeddingMatrix load_entry(const Graph& g, const EmbeddingEntry& entry, std::uint64_t seed) {
  if (entry.path) return load_embedding(g, *entry.path);
  if (entry.demo_rp_dim) return demo_rp_embedding(g, *entry.demo_rp_dim, seed);
  fail(ErrorKind::Validation, "embedding entry '" + entry.name + "' has neither a path nor a demo request");
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
  RunConfig config;
  if (!j.contains("seed")) {
    fail(ErrorKind::Validation, "config must set an explicit seed (no wall-clock defaults)");
  }
  config.seed = j.at("seed").get<std::uint64_t>();

  if (!j.contains("graph") || !j.at("graph").contains("edges")) {
    fail(ErrorKind::Validation, "config must point at a graph edge list under graph.edges");
  }
  const auto& graph = j.at("graph");
  config.edge_path = resolve_path(base_dir, graph.at("edges").get<std::string>());
  if (graph.contains("attributes") && !graph.at("attributes").is_null()) {
    config.attr_path = resolve_path(base_dir, graph.at("attributes").get<std::string>());
  }
  if (graph.contains("labels") && !graph.at("labels").is_null()) {
    config.label_path = resolve_path(base_dir, graph.at("labels").get<std::string>());
  }
  if (graph.contains("directed_input")) config.directed_input = graph.at("directed_input").get<bool>();

  if (j.contains("relations")) {
    for (const auto& r : j.at("relations")) {
      RelationSpec spec;
      spec.kind = relation_kind_from_string(r.at("kind").get<std::string>());
      if (r.contains("k")) spec.k = r.at("k").get<int>();
      if (r.contains("alpha")) spec.alpha = r.at("alpha").get<double>();
      config.relations.push_back(spec);
    }
  }

  if (j.contains("embeddings")) {
    for (const auto& e : j.at("embeddings")) {
      EmbeddingEntry entry;
      entry.name = e.at("name").get<std::string>();
      if (e.contains("path")) entry.path = resolve_path(base_dir, e.at("path").get<std::string>());
      if (e.contains("demo_rp")) entry.demo_rp_dim = e.at("demo_rp").at("dim").get<int>();
      config.embeddings.push_back(std::move(entry));
    }
  }

  if (j.contains("methods")) {
    config.methods.clear();
    for (const auto& m : j.at("methods")) config.methods.push_back(method_from_string(m.get<std::string>()));
  }

  config.params = j.contains("params") ? CoherenceParams::from_json(j.at("params")) : CoherenceParams{};
  config.params.seed = config.seed;

  if (j.contains("weights") && !j.at("weights").is_null()) {
    std::map<std::string, double> w;
    for (const auto& [name, value] : j.at("weights").items()) w[name] = value.get<double>();
    config.weights = std::move(w);
  }

  if (j.contains("evd_dim") && !j.at("evd_dim").is_null()) config.evd_dim = j.at("evd_dim").get<int>();
  if (j.contains("dims")) {
    for (const auto& d : j.at("dims")) config.dims.push_back(d.get<int>());
    std::sort(config.dims.begin(), config.dims.end());
  }
  if (j.contains("restrict_to_queries")) {
    config.restrict_to_queries = j.at("restrict_to_queries").get<bool>();
  }

  if (j.contains("out_dir")) config.out_dir = resolve_path(base_dir, j.at("out_dir").get<std::string>());
  if (j.contains("cache_dir") && !j.at("cache_dir").is_null()) {
    config.cache_dir = resolve_path(base_dir, j.at("cache_dir").get<std::string>());
  }

  // Validation: referenced files exist, embedding names unique and nonempty.
  require_file(config.edge_path, "graph edge list");
  if (config.attr_path) require_file(*config.attr_path, "attribute table");
  if (config.label_path) require_file(*config.label_path, "label table");
  std::set<std::string> names;
  for (const auto& entry : config.embeddings) {
    if (entry.name.empty()) fail(ErrorKind::Validation, "embedding entries must be named");
    if (!names.insert(entry.name).second) {
      fail(ErrorKind::Validation, "duplicate embedding name: " + entry.name);
    }
    if (entry.path) require_file(*entry.path, "embedding file for '" + entry.name + "'");
    if (!entry.path && !entry.demo_rp_dim) {
      fail(ErrorKind::Validation, "embedding '" + entry.name + "' needs a path or a demo_rp request");
    }
  }
  return config;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j, fs::path(path).parent_path().string());
}

CommandResult cmd_relations(const RunConfig& config) {
  const Graph g = load_config_graph(config);
  const auto relations = resolve_relations(config, g);
  SimilarityCache cache(g, config.cache_dir);

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& spec : relations) {
    const SimilarityMatrix& s = cache.get(spec);
    nlohmann::json row{{"name", spec.name()},
                       {"kind", to_string(spec.kind)},
                       {"k", spec.k},
                       {"alpha", spec.alpha},
                       {"min", s.min_stored()},
                       {"max", s.max_stored()},
                       {"zero_fraction", s.zero_fraction()},
                       {"symmetric", s.symmetric()},
                       {"content_hash", hex64(s.content_hash())},
                       {"cache_hit", cache.last_was_disk_hit(spec.name())}};
    if (config.cache_dir) row["cache_path"] = cache.disk_path(spec);
    if (spec.kind == RelationKind::DegreeDist) {
      row["note"] = "histogram over exactly-k-hop neighbors";
    } else if (spec.kind == RelationKind::LabelDist || spec.kind == RelationKind::AttrDist) {
      row["note"] = "L1 row normalization of the propagated features";
    }
    rows.push_back(std::move(row));
  }

  nlohmann::json summary{{"graph", graph_json(g)}, {"relations", rows}};
  write_json((fs::path(config.out_dir) / "relations_summary.json").string(), summary);
  write_sidecar(config, "relations");
  return CommandResult{std::move(summary)};
}

CommandResult cmd_interpret(const RunConfig& config) {
  const Graph g = load_config_graph(config);
  const auto relations = resolve_relations(config, g);
  if (config.embeddings.empty()) {
    fail(ErrorKind::Validation, "interpret needs at least one embedding entry");
  }
  if (config.restrict_to_queries) {
    for (Method m : config.methods) {
      if (m != Method::Nci) {
        fail(ErrorKind::Capability,
             std::string("method '") + to_string(m) +
                 "' samples arbitrary node pairs and cannot run on a query-restricted block");
      }
    }
  }

  // Row-restricted matrices hold only the query rows; they are not disk
  // cacheable, so the cache is bypassed in that mode.
  SimilarityCache cache(g, config.restrict_to_queries ? std::nullopt : config.cache_dir);
  std::vector<SimilarityMatrix> restricted;
  if (config.restrict_to_queries) {
    const std::vector<int> query_rows = coherence_query_set(g.node_count(), config.params);
    restricted.reserve(relations.size());
    for (const auto& spec : relations) restricted.push_back(compute_similarity_rows(g, spec, query_rows));
  }

  std::vector<const SimilarityMatrix*> matrices;
  nlohmann::json similarity_hashes = nlohmann::json::object();
  for (std::size_t i = 0; i < relations.size(); ++i) {
    const SimilarityMatrix& s =
        config.restrict_to_queries ? restricted[i] : cache.get(relations[i]);
    matrices.push_back(&s);
    similarity_hashes[relations[i].name()] = hex64(s.content_hash());
  }

  const nlohmann::json graph_block = graph_json(g);
  std::vector<CoherenceReport> reports;
  nlohmann::json combined = nlohmann::json::array();

  for (const auto& entry : config.embeddings) {
    const EmbeddingMatrix z = load_entry(g, entry, config.seed);
    if (z.rows() != g.node_count()) {
      fail(ErrorKind::Reference, "embedding '" + entry.name + "' does not cover the graph's nodes");
    }
    CoherenceReport report = interpret_embedding(entry.name, z, matrices, config.params, config.weights);

    nlohmann::json doc = report.to_json();
    doc["graph"] = graph_block;
    doc["similarity_hashes"] = similarity_hashes;
    doc["source"] = z.source;
    doc["restricted_to_queries"] = config.restrict_to_queries;

    if (std::find(config.methods.begin(), config.methods.end(), Method::KendallTau) != config.methods.end() ||
        std::find(config.methods.begin(), config.methods.end(), Method::PropertyClass) != config.methods.end()) {
      nlohmann::json baselines = nlohmann::json::array();
      for (Method m : config.methods) {
        if (m == Method::Nci) continue;
        for (const SimilarityMatrix* s : matrices) {
          nlohmann::json row{{"method", to_string(m)}, {"relation", s->spec().name()}};
          try {
            row["value"] = interpretation_score(m, z, *s, config.params);
          } catch (const Error& e) {
            row["error"] = std::string(to_string(e.kind())) + ": " + e.what();
          }
          if (m == Method::KendallTau) row["pair_sample"] = config.params.pair_sample;
          row["seed"] = config.seed;
          baselines.push_back(std::move(row));
        }
      }
      doc["baselines"] = std::move(baselines);
    }

    write_json((fs::path(config.out_dir) / ("interpret_" + entry.name + ".json")).string(), doc);
    reports.push_back(std::move(report));
  }

  // Random row: the average null-hypothesis upper bounds across models.
  nlohmann::json random_relations = nlohmann::json::array();
  std::map<std::string, double> random_rates;
  for (std::size_t r = 0; r < matrices.size(); ++r) {
    const std::string name = matrices[r]->spec().name();
    const double clu_bound = clustering_null_bound(config.params.c);
    double smo_bound_sum = 0.0;
    int smo_count = 0;
    bool clu_usable = false;
    for (const auto& report : reports) {
      const auto& rel = report.relations[r];
      clu_usable = clu_usable || rel.clustering_usable;
      if (rel.smoothness_usable) {
        smo_bound_sum += rel.smoothness_bound;
        ++smo_count;
      }
    }
    double aggregate = 0.0;
    const double smo_bound = smo_count > 0 ? smo_bound_sum / smo_count : 0.0;
    if (clu_usable && smo_count > 0) {
      aggregate = coherence_rate(clu_bound, smo_bound);
    } else if (clu_usable) {
      aggregate = clu_bound;
    } else if (smo_count > 0) {
      aggregate = smo_bound;
    }
    random_rates[name] = aggregate;
    random_relations.push_back(nlohmann::json{{"name", name},
                                              {"clustering_bound", clu_bound},
                                              {"smoothness_bound", smo_bound},
                                              {"coherence_rate", aggregate}});
  }

  for (const auto& report : reports) {
    nlohmann::json rates = nlohmann::json::object();
    for (const auto& rel : report.relations) rates[rel.name] = rel.aggregate;
    combined.push_back(nlohmann::json{{"model", report.model},
                                      {"model_coherence_score", report.model_score},
                                      {"coherence_rates", rates}});
  }
  {
    nlohmann::json rates = nlohmann::json::object();
    for (const auto& [name, rate] : random_rates) rates[name] = rate;
    combined.push_back(nlohmann::json{{"model", "Random"},
                                      {"model_coherence_score", model_coherence_score(random_rates, config.weights)},
                                      {"coherence_rates", rates},
                                      {"relations", random_relations}});
  }
  std::sort(combined.begin(), combined.end(), [](const nlohmann::json& a, const nlohmann::json& b) {
    const double sa = a.at("model_coherence_score").get<double>();
    const double sb = b.at("model_coherence_score").get<double>();
    if (sa != sb) return sa > sb;
    return a.at("model").get<std::string>() < b.at("model").get<std::string>();
  });

  nlohmann::json summary{{"graph", graph_block}, {"models", combined}, {"similarity_hashes", similarity_hashes}};
  write_json((fs::path(config.out_dir) / "interpret_combined.json").string(), summary);

  // Flat comparison table, sorted by model coherence score.
  {
    std::ostringstream csv;
    csv << "model,model_coherence_score";
    for (const SimilarityMatrix* s : matrices) csv << ',' << s->spec().name();
    csv << '\n';
    char buf[64];
    for (const auto& row : combined) {
      csv << row.at("model").get<std::string>();
      std::snprintf(buf, sizeof(buf), "%.17g", row.at("model_coherence_score").get<double>());
      csv << ',' << buf;
      for (const SimilarityMatrix* s : matrices) {
        std::snprintf(buf, sizeof(buf), "%.17g",
                      row.at("coherence_rates").at(s->spec().name()).get<double>());
        csv << ',' << buf;
      }
      csv << '\n';
    }
    write_text((fs::path(config.out_dir) / "interpret_combined.csv").string(), csv.str());
  }

  write_sidecar(config, "interpret");
  return CommandResult{std::move(summary)};
}

CommandResult cmd_evaluate_method(const RunConfig& config) {
  const Graph g = load_config_graph(config);
  const auto relations = resolve_relations(config, g);
  SimilarityCache cache(g, config.cache_dir);

  std::vector<int> dims = config.dims;
  const bool sweep = !dims.empty();
  if (dims.empty()) dims.push_back(config.evd_dim.value_or(g.node_count()));

  const auto results = expressiveness_sweep(g, relations, dims, config.methods, config.params, &cache);

  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : results) all.push_back(r.to_json());

  for (Method m : config.methods) {
    nlohmann::json per_method = nlohmann::json::array();
    for (const auto& r : results) {
      if (r.method == m) per_method.push_back(r.to_json());
    }
    const std::string stem = sweep ? std::string("ime_sweep_") + to_string(m)
                                   : std::string("ime_") + to_string(m);
    write_json((fs::path(config.out_dir) / (stem + ".json")).string(),
               sweep ? per_method : per_method.at(0));
  }

  // Flat export for plotting: one row per (method, dimension).
  {
    std::ostringstream csv;
    csv << "method,d,expressiveness,mrr\n";
    char buf[64];
    for (const auto& r : results) {
      csv << to_string(r.method) << ',' << r.d << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", r.expressiveness);
      csv << buf << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", r.mrr);
      csv << buf << '\n';
    }
    write_text((fs::path(config.out_dir) / "ime_mrr_table.csv").string(), csv.str());
  }

  nlohmann::json summary{{"graph", graph_json(g)}, {"results", all}};
  write_json((fs::path(config.out_dir) / "ime_summary.json").string(), summary);
  write_sidecar(config, "evaluate-method");
  return CommandResult{std::move(summary)};
}

CommandResult cmd_correlate(const RunConfig& config, const std::string& metrics_path) {
  require_file(metrics_path, "metrics table");
  std::ifstream in(metrics_path);
  if (!in) fail(ErrorKind::Io, "cannot open metrics table: " + metrics_path);

  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Parse, metrics_path + ": empty metrics table");
  {
    std::string squashed;
    for (char c : line) {
      if (c != '\r' && c != ' ') squashed.push_back(c);
    }
    if (squashed != "model,task,metric") {
      fail(ErrorKind::Parse, metrics_path + ": expected header 'model,task,metric'");
    }
  }

  struct Observation {
    std::string model;
    double value;
  };
  std::map<std::string, std::vector<Observation>> tasks;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
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
    if (fields.size() != 3) fail(ErrorKind::Parse, metrics_path + ":" + std::to_string(line_no) + ": ragged row");
    try {
      tasks[fields[1]].push_back({fields[0], std::stod(fields[2])});
    } catch (const std::exception&) {
      fail(ErrorKind::Parse, metrics_path + ":" + std::to_string(line_no) + ": expected a real metric value");
    }
  }

  // Every referenced model must have an interpret report in the output dir.
  struct ModelRates {
    double omega = 0.0;
    std::map<std::string, double> per_relation;
  };
  std::map<std::string, ModelRates> model_rates;
  auto rates_for = [&](const std::string& model) -> const ModelRates& {
    auto it = model_rates.find(model);
    if (it != model_rates.end()) return it->second;
    const std::string path = (fs::path(config.out_dir) / ("interpret_" + model + ".json")).string();
    if (!fs::exists(path)) {
      fail(ErrorKind::Reference, "no coherence report for model '" + model + "' in " + config.out_dir);
    }
    std::ifstream report_in(path);
    nlohmann::json doc;
    report_in >> doc;
    ModelRates rates;
    rates.omega = doc.at("model_coherence_score").get<double>();
    for (const auto& rel : doc.at("relations")) {
      rates.per_relation[rel.at("name").get<std::string>()] = rel.at("coherence_rate").get<double>();
    }
    return model_rates.emplace(model, std::move(rates)).first->second;
  };

  nlohmann::json task_rows = nlohmann::json::array();
  for (const auto& [task, observations] : tasks) {
    if (observations.size() < 2) {
      fail(ErrorKind::UndefinedCorrelation,
           "task '" + task + "' has fewer than 2 models; correlation undefined");
    }
    std::vector<double> metric;
    std::vector<double> omega;
    std::map<std::string, std::vector<double>> relation_columns;
    nlohmann::json models = nlohmann::json::array();
    for (const auto& obs : observations) {
      const ModelRates& rates = rates_for(obs.model);
      metric.push_back(obs.value);
      omega.push_back(rates.omega);
      for (const auto& [name, rate] : rates.per_relation) relation_columns[name].push_back(rate);
      models.push_back(obs.model);
    }
    nlohmann::json per_relation = nlohmann::json::object();
    for (const auto& [name, xs] : relation_columns) {
      if (xs.size() != metric.size()) continue;
      per_relation[name] = pearson_correlation(xs, metric);
    }
    task_rows.push_back(nlohmann::json{{"task", task},
                                       {"models", models},
                                       {"omega_pearson", pearson_correlation(omega, metric)},
                                       {"per_relation_pearson", per_relation}});
  }

  nlohmann::json summary{{"tasks", task_rows}};
  write_json((fs::path(config.out_dir) / "correlation.json").string(), summary);
  write_sidecar(config, "correlate");
  return CommandResult{std::move(summary)};
}

}  // namespace nci
