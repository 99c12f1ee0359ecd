// Command-line front end. Links only the shared C API; config overrides are
// applied to the JSON document before it crosses the boundary.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nci.h"

namespace {

struct Overrides {
  std::string config_path;
  std::string seed;
  std::string out_dir;
  std::string cache_dir;
  std::vector<int> dims;
  std::vector<std::string> methods;
  std::vector<std::string> relations;
};

int fail_usage(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return 2;
}

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Run config JSON")->required();
  cmd->add_option("--seed", o.seed, "Override the config seed");
  cmd->add_option("--out-dir", o.out_dir, "Override the output directory");
  cmd->add_option("--cache-dir", o.cache_dir, "Override the similarity cache directory");
  cmd->add_option("--dims", o.dims, "Override the sweep dimensions")->delimiter(',');
  cmd->add_option("--methods", o.methods, "Override the method list")->delimiter(',');
  cmd->add_option("--relations", o.relations, "Override the relation kinds")->delimiter(',');
}

int apply_overrides(nlohmann::json& config, const Overrides& o) {
  if (!o.seed.empty()) {
    try {
      config["seed"] = std::stoull(o.seed);
    } catch (const std::exception&) {
      return fail_usage("--seed must be an unsigned integer");
    }
  }
  if (!o.out_dir.empty()) config["out_dir"] = o.out_dir;
  if (!o.cache_dir.empty()) config["cache_dir"] = o.cache_dir;
  if (!o.dims.empty()) config["dims"] = o.dims;
  if (!o.methods.empty()) config["methods"] = o.methods;
  if (!o.relations.empty()) {
    nlohmann::json relations = nlohmann::json::array();
    for (const auto& kind : o.relations) relations.push_back({{"kind", kind}});
    config["relations"] = relations;
  }
  return 0;
}

int report(nci_status status, char* summary) {
  if (status != NCI_OK) {
    std::cerr << "error: " << nci_last_error() << "\n";
    return nci_exit_code(status);
  }
  if (summary != nullptr) {
    std::cout << summary << "\n";
    nci_string_free(summary);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Node relation coherence: interpret embeddings, evaluate interpretation methods"};
  app.require_subcommand(1);

  Overrides o;
  std::string metrics_path;

  CLI::App* relations = app.add_subcommand("relations", "Compute and cache similarity matrices");
  add_common_options(relations, o);

  CLI::App* interpret = app.add_subcommand("interpret", "Score embeddings against node relations");
  add_common_options(interpret, o);

  CLI::App* evaluate = app.add_subcommand("evaluate-method", "Run the interpretation-method evaluation");
  add_common_options(evaluate, o);

  CLI::App* correlate = app.add_subcommand("correlate", "Correlate coherence with task metrics");
  add_common_options(correlate, o);
  correlate->add_option("--metrics", metrics_path, "CSV table model,task,metric")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::ifstream config_in(o.config_path);
  if (!config_in) return fail_usage("cannot open config: " + o.config_path);
  nlohmann::json config;
  try {
    config_in >> config;
  } catch (const nlohmann::json::exception& e) {
    return fail_usage(std::string("config is not valid JSON: ") + e.what());
  }
  if (const int code = apply_overrides(config, o); code != 0) return code;

  const std::string base_dir = std::filesystem::path(o.config_path).parent_path().string();
  const std::string text = config.dump();

  char* summary = nullptr;
  nci_status status = NCI_E_INTERNAL;
  if (relations->parsed()) {
    status = nci_run_relations(text.c_str(), base_dir.c_str(), &summary);
  } else if (interpret->parsed()) {
    status = nci_run_interpret(text.c_str(), base_dir.c_str(), &summary);
  } else if (evaluate->parsed()) {
    status = nci_run_evaluate_method(text.c_str(), base_dir.c_str(), &summary);
  } else if (correlate->parsed()) {
    status = nci_run_correlate(text.c_str(), base_dir.c_str(), metrics_path.c_str(), &summary);
  } else {
    return fail_usage("no subcommand selected");
  }
  return report(status, summary);
}
