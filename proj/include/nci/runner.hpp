#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nci/coherence.hpp"
#include "nci/ime.hpp"
#include "nci/relations.hpp"

namespace nci {

/// One embedding input: either a CSV file or a demo random-projection
/// request generated from the run seed.
struct EmbeddingEntry {
  std::string name;
  std::optional<std::string> path;
  std::optional<int> demo_rp_dim;
};

/// A fully resolved run. Every CLI flag is an override of a config key, so
/// one JSON document describes a run completely; the seed is mandatory and
/// there are no wall-clock defaults.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string edge_path;
  std::optional<std::string> attr_path;
  std::optional<std::string> label_path;
  bool directed_input = false;

  std::vector<RelationSpec> relations;  // empty: every relation computable on the graph
  std::vector<EmbeddingEntry> embeddings;
  std::vector<Method> methods{Method::Nci};
  CoherenceParams params;
  std::optional<std::map<std::string, double>> weights;

  std::optional<int> evd_dim;  // evaluate-method dimension; defaults to |V|
  std::vector<int> dims;       // expressiveness sweep; empty means single run

  // interpret-only: compute similarity rows for the query set instead of
  // full matrices (memory-bound graphs); supports the nci method only.
  bool restrict_to_queries = false;

  std::string out_dir = "out";
  std::optional<std::string> cache_dir;

  static RunConfig from_json(const nlohmann::json& j, const std::string& base_dir);
  static RunConfig from_file(const std::string& path);
};

/// Command results carry the summary document that was also written to the
/// output directory; timestamps live in a sidecar file so report bytes stay
/// reproducible.
struct CommandResult {
  nlohmann::json summary;
};

CommandResult cmd_relations(const RunConfig& config);
CommandResult cmd_interpret(const RunConfig& config);
CommandResult cmd_evaluate_method(const RunConfig& config);
CommandResult cmd_correlate(const RunConfig& config, const std::string& metrics_path);

}  // namespace nci
