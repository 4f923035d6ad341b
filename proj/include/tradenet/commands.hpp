#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tradenet/ingest.hpp"

namespace tradenet::cli {

inline constexpr const char* kVersion = "1.0.0";

// Declarative run configuration (JSON file). CLI flags --seed, --jobs and
// --out override the corresponding keys. Seeds are always explicit; there is
// no wall-clock fallback.
struct RunConfig {
  std::string config_path;
  std::uint64_t config_hash = 0;

  std::string records_path;
  std::string schema_path;
  std::vector<std::string> indicator_paths;
  std::string panel_path;  // pre-assembled panel, alternative to the above
  std::string out_dir = "out";
  std::string grid_path;

  std::vector<int> sections;
  std::map<int, std::string> section_labels;
  ingest::Granularity granularity = ingest::Granularity::kQuarterly;
  std::optional<ingest::Period> period_start, period_end;

  std::string target_indicator = "gdp_growth";
  int horizon = 1;
  bool include_global_metrics = true;
  bool include_node_metrics = true;

  int folds = 10;
  std::string fold_strategy = "rows";  // "rows" or "year_blocked"
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
  int min_resamples = 4;
  double alpha = 0.05;
  double corr_threshold = 0.9;
  double freq_cut = 100.0;
  int knn_impute_k = 5;

  int shap_permutations = 200;
  int shap_background = 200;
  int shap_exact_max_features = 15;
  int top_k_importance = 15;
  int top_k_beeswarm = 20;
  std::vector<std::string> dependence_features;  // empty = top 5 by importance

  static RunConfig load(const std::string& path);
  void validate_common() const;  // seed present, referenced files exist
};

// Each command returns a process exit code: 0 success, 1 runtime failure,
// 2 usage/config error. A run manifest is written for every command.
int cmd_build_networks(const RunConfig& config);
int cmd_rank(const RunConfig& config, int section, int year, int top_k);
int cmd_panel(const RunConfig& config);
int cmd_race(const RunConfig& config);
int cmd_explain(const RunConfig& config, const std::string& model_path);

}  // namespace tradenet::cli
