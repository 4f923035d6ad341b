#include "tradenet/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tradenet/common.hpp"
#include "tradenet/csv.hpp"
#include "tradenet/learners.hpp"
#include "tradenet/netmetrics.hpp"
#include "tradenet/panel.hpp"
#include "tradenet/preprocess.hpp"
#include "tradenet/selection.hpp"
#include "tradenet/shapley.hpp"
#include "tradenet/tradegraph.hpp"

namespace tradenet::cli {

namespace fs = std::filesystem;

namespace {

// Abbreviated HS section names, after the ten most traded sections.
const std::map<int, std::string>& builtin_section_labels() {
  static const std::map<int, std::string> labels = {
      {4, "beverages_tobacco"}, {5, "mineral"},         {6, "chemical"},
      {7, "plastics_rubber"},   {11, "textile"},        {14, "precious_metals"},
      {15, "base_metals"},      {16, "mech_electrical"}, {17, "transport"},
      {18, "instruments"},
  };
  return labels;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError("config: missing required path for " + what);
  if (!fs::exists(path)) throw ConfigError("config: " + what + " not found: " + path);
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  const std::string text = read_file(path);
  nlohmann::json j = nlohmann::json::parse(text);

  RunConfig config;
  config.config_path = path;
  config.config_hash = fnv1a_hash(text);

  config.records_path = j.value("records", "");
  config.schema_path = j.value("schema", "");
  if (j.contains("indicators"))
    config.indicator_paths = j.at("indicators").get<std::vector<std::string>>();
  config.panel_path = j.value("panel", "");
  config.out_dir = j.value("out_dir", "out");
  config.grid_path = j.value("grid", "");

  if (j.contains("sections")) config.sections = j.at("sections").get<std::vector<int>>();
  config.section_labels = builtin_section_labels();
  if (j.contains("section_labels"))
    for (const auto& [key, value] : j.at("section_labels").items())
      config.section_labels[std::stoi(key)] = value.get<std::string>();

  const std::string granularity = j.value("granularity", "quarterly");
  if (granularity == "quarterly") config.granularity = ingest::Granularity::kQuarterly;
  else if (granularity == "annual") config.granularity = ingest::Granularity::kAnnual;
  else throw ConfigError("config: granularity must be 'quarterly' or 'annual'");

  if (j.contains("period_start")) {
    config.period_start = ingest::Period::parse(j.at("period_start").get<std::string>());
    if (!config.period_start) throw ConfigError("config: period_start must be YYYY-MM");
  }
  if (j.contains("period_end")) {
    config.period_end = ingest::Period::parse(j.at("period_end").get<std::string>());
    if (!config.period_end) throw ConfigError("config: period_end must be YYYY-MM");
  }

  config.target_indicator = j.value("target", "gdp_growth");
  config.horizon = j.value("horizon", 1);
  config.include_global_metrics = j.value("include_global_metrics", true);
  config.include_node_metrics = j.value("include_node_metrics", true);

  config.folds = j.value("folds", 10);
  config.fold_strategy = j.value("fold_strategy", "rows");
  if (config.fold_strategy != "rows" && config.fold_strategy != "year_blocked")
    throw ConfigError("config: fold_strategy must be 'rows' or 'year_blocked'");
  if (j.contains("seed")) {
    config.seed = j.at("seed").get<std::uint64_t>();
    config.seed_set = true;
  }
  config.jobs = j.value("jobs", 1);
  config.min_resamples = j.value("min_resamples", 4);
  config.alpha = j.value("alpha", 0.05);
  config.corr_threshold = j.value("corr_threshold", 0.9);
  config.freq_cut = j.value("freq_cut", 100.0);
  config.knn_impute_k = j.value("knn_k", 5);

  if (j.contains("shap")) {
    const auto& s = j.at("shap");
    config.shap_permutations = s.value("permutations", 200);
    config.shap_background = s.value("background", 200);
    config.shap_exact_max_features = s.value("exact_max_features", 15);
    config.top_k_importance = s.value("top_k_importance", 15);
    config.top_k_beeswarm = s.value("top_k_beeswarm", 20);
    if (s.contains("dependence_features"))
      config.dependence_features = s.at("dependence_features").get<std::vector<std::string>>();
  }
  return config;
}

void RunConfig::validate_common() const {
  if (!seed_set) throw ConfigError("config: 'seed' is required (no wall-clock default)");
  if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  if (folds < 2) throw ConfigError("config: folds must be >= 2");
  if (!records_path.empty()) require_file(records_path, "records");
  if (!schema_path.empty()) require_file(schema_path, "schema");
  for (const auto& p : indicator_paths) require_file(p, "indicators");
  if (!panel_path.empty()) require_file(panel_path, "panel");
  if (!grid_path.empty()) require_file(grid_path, "grid");
}

namespace {

struct LoadedRecords {
  std::vector<ingest::TradeRecord> records;
  std::vector<ingest::RowError> errors;
};

LoadedRecords load_records(const RunConfig& config) {
  require_file(config.records_path, "records");
  ingest::ColumnSchema schema;
  if (!config.schema_path.empty()) schema = ingest::ColumnSchema::load(config.schema_path);
  std::ifstream in(config.records_path);
  if (!in) throw ConfigError("cannot open records file: " + config.records_path);
  auto parsed = ingest::parse_records(in, schema);

  LoadedRecords out;
  out.errors = std::move(parsed.errors);
  for (auto& rec : parsed.records) {
    if (config.period_start && rec.period < *config.period_start) continue;
    if (config.period_end && *config.period_end < rec.period) continue;
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::string section_label(const RunConfig& config, int section) {
  const auto it = config.section_labels.find(section);
  return it != config.section_labels.end() ? it->second : "s" + std::to_string(section);
}

std::vector<int> sections_present(const ingest::FlowTable& flow) {
  std::set<int> sections;
  for (const auto& [key, value] : flow.entries) sections.insert(key.section);
  return {sections.begin(), sections.end()};
}

std::vector<std::string> periods_of_section(const ingest::FlowTable& flow, int section) {
  std::set<std::string> periods;
  for (const auto& [key, value] : flow.entries)
    if (key.section == section && value > 0.0) periods.insert(key.bucket);
  return {periods.begin(), periods.end()};
}

// Manifest: the reproducibility record for one command run. Deterministic
// content only (no wall clock), so reruns are byte-identical.
void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["config_file"] = config.config_path;
  j["config_hash"] = std::to_string(config.config_hash);
  j["seed"] = config.seed;
  j["jobs"] = config.jobs;
  j["version"] = kVersion;
  std::vector<std::string> sorted = outputs;
  std::sort(sorted.begin(), sorted.end());
  j["outputs"] = sorted;
  csv::write_file_atomic((fs::path(config.out_dir) / ("manifest_" + command + ".json")).string(),
                         j.dump(2) + "\n");
}

std::map<int, metrics::MetricTable> annual_metric_tables(const RunConfig& config,
                                                         const ingest::FlowTable& annual_flow,
                                                         const std::vector<int>& sections) {
  std::map<int, metrics::MetricTable> tables;
  for (const int section : sections) {
    const auto periods = periods_of_section(annual_flow, section);
    if (periods.empty())
      throw ConfigError("no flows for configured section " + std::to_string(section));
    std::vector<graph::TradeNetwork> networks;
    networks.reserve(periods.size());
    for (const auto& period : periods)
      networks.push_back(graph::build_network(annual_flow, section, period));
    tables.emplace(section, metrics::compute_metric_table(networks, config.seed, config.jobs));
  }
  return tables;
}

panel::SupervisedDataset build_dataset(const RunConfig& config) {
  panel::FeaturePanel feature_panel;
  if (!config.panel_path.empty()) {
    std::ifstream in(config.panel_path);
    if (!in) throw ConfigError("cannot open panel file: " + config.panel_path);
    feature_panel = panel::import_panel(in);
  } else {
    const auto loaded = load_records(config);
    const auto annual_flow =
        ingest::build_flow_table(loaded.records, ingest::Granularity::kAnnual);
    std::vector<int> sections = config.sections;
    if (sections.empty()) sections = sections_present(annual_flow);
    const auto tables = annual_metric_tables(config, annual_flow, sections);

    std::vector<panel::IndicatorTable> indicators;
    for (const auto& path : config.indicator_paths) {
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open indicator file: " + path);
      indicators.push_back(panel::load_indicators(in));
    }

    panel::PanelConfig pc;
    pc.sections = sections;
    pc.include_global_metrics = config.include_global_metrics;
    pc.include_node_metrics = config.include_node_metrics;
    for (const int s : sections) pc.section_labels[s] = section_label(config, s);
    feature_panel = panel::assemble_panel(indicators, tables, pc);
  }
  return panel::align_target(feature_panel, config.horizon, config.target_indicator);
}

preprocess::PipelineConfig pipeline_config_of(const RunConfig& config) {
  preprocess::PipelineConfig pc;
  pc.corr_threshold = config.corr_threshold;
  pc.freq_cut = config.freq_cut;
  pc.knn_k = config.knn_impute_k;
  return pc;
}

std::string sanitize_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return out;
}

}  // namespace

int cmd_build_networks(const RunConfig& config) {
  config.validate_common();
  const auto loaded = load_records(config);
  for (const auto& err : loaded.errors)
    std::cerr << config.records_path << ":" << err.line << ": " << err.message << "\n";

  const auto flow = ingest::build_flow_table(loaded.records, config.granularity);
  std::vector<int> sections = config.sections;
  if (sections.empty()) sections = sections_present(flow);

  std::vector<std::string> outputs;
  for (const int section : sections) {
    const auto periods = periods_of_section(flow, section);
    if (periods.empty())
      throw ConfigError("no flows for configured section " + std::to_string(section));
    std::vector<graph::TradeNetwork> networks;
    for (const auto& period : periods) {
      auto net = graph::build_network(flow, section, period);
      const auto path = (fs::path(config.out_dir) / "networks" /
                         ("edges_s" + std::to_string(section) + "_" + period + ".txt"))
                            .string();
      csv::write_file_atomic(path, graph::export_edge_list(net));
      outputs.push_back(path);
      networks.push_back(std::move(net));
    }
    const auto table = metrics::compute_metric_table(networks, config.seed, config.jobs);
    const auto path =
        (fs::path(config.out_dir) / ("metrics_" + section_label(config, section) + ".csv"))
            .string();
    csv::write_file_atomic(path, metrics::export_metric_series(table));
    outputs.push_back(path);
  }

  // Relevance shares over every section present, Table-1 style.
  {
    std::map<int, double> by_section;
    double total = 0.0;
    for (const auto& [key, value] : flow.entries) {
      by_section[key.section] += value;
      total += value;
    }
    std::vector<std::pair<double, int>> shares;
    for (const auto& [section, value] : by_section)
      shares.push_back({100.0 * value / total, section});
    std::sort(shares.begin(), shares.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::ostringstream out;
    out << "section,label,relevance_percent\n";
    for (const auto& [share, section] : shares)
      csv::write_row(out, {std::to_string(section), section_label(config, section),
                           format_fixed(share, 1)});
    const auto path = (fs::path(config.out_dir) / "relevance.csv").string();
    csv::write_file_atomic(path, out.str());
    outputs.push_back(path);
  }

  if (!loaded.errors.empty()) {
    std::ostringstream out;
    out << "line,message\n";
    for (const auto& err : loaded.errors)
      csv::write_row(out, {std::to_string(err.line), err.message});
    const auto path = (fs::path(config.out_dir) / "ingest_errors.csv").string();
    csv::write_file_atomic(path, out.str());
    outputs.push_back(path);
  }

  write_manifest(config, "build-networks", outputs);
  return loaded.errors.empty() ? 0 : 1;
}

int cmd_rank(const RunConfig& config, int section, int year, int top_k) {
  config.validate_common();
  if (top_k < 1) throw ConfigError("rank: top_k must be >= 1");
  const auto loaded = load_records(config);
  const auto flow = ingest::build_flow_table(loaded.records, ingest::Granularity::kAnnual);
  const auto net = graph::build_network(flow, section, std::to_string(year));
  const auto ranking = metrics::centrality_ranking(net, top_k);
  const auto path = (fs::path(config.out_dir) /
                     ("rank_" + section_label(config, section) + "_" + std::to_string(year) +
                      ".csv"))
                        .string();
  csv::write_file_atomic(path, metrics::export_ranking(ranking));
  write_manifest(config, "rank", {path});
  return 0;
}

int cmd_panel(const RunConfig& config) {
  config.validate_common();
  const auto loaded = load_records(config);
  const auto annual_flow = ingest::build_flow_table(loaded.records, ingest::Granularity::kAnnual);
  std::vector<int> sections = config.sections;
  if (sections.empty()) sections = sections_present(annual_flow);
  const auto tables = annual_metric_tables(config, annual_flow, sections);

  std::vector<panel::IndicatorTable> indicators;
  for (const auto& path : config.indicator_paths) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open indicator file: " + path);
    indicators.push_back(panel::load_indicators(in));
  }

  panel::PanelConfig pc;
  pc.sections = sections;
  pc.include_global_metrics = config.include_global_metrics;
  pc.include_node_metrics = config.include_node_metrics;
  for (const int s : sections) pc.section_labels[s] = section_label(config, s);
  const auto feature_panel = panel::assemble_panel(indicators, tables, pc);

  const auto panel_path = (fs::path(config.out_dir) / "panel.csv").string();
  csv::write_file_atomic(panel_path, panel::export_panel(feature_panel));
  write_manifest(config, "panel", {panel_path});
  return 0;
}

namespace {

// Winner artifact: fitted pipeline + model + spec in one JSON file.
void write_winner_artifact(const std::string& path, const learn::ModelSpec& spec,
                           const preprocess::FittedPipeline& pipeline,
                           const learn::TrainedModel& model, std::uint64_t seed) {
  nlohmann::json j;
  j["version"] = 1;
  j["family"] = learn::family_name(spec.family);
  j["params"] = spec.params;
  j["seed"] = seed;
  j["pipeline"] = nlohmann::json::parse(pipeline.serialize());
  j["model"] = nlohmann::json::parse(learn::serialize_model(model));
  csv::write_file_atomic(path, j.dump() + "\n");
}

struct WinnerArtifact {
  learn::ModelSpec spec;
  preprocess::FittedPipeline pipeline;
  learn::ModelPtr model;
};

WinnerArtifact load_winner_artifact(const std::string& path) {
  const std::string text = read_file(path);
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("version", 0) != 1) throw ConfigError("model artifact: unsupported version");
  const auto family = learn::family_from_name(j.at("family").get<std::string>());
  if (!family) throw ConfigError("model artifact: unknown family");
  WinnerArtifact artifact{
      learn::ModelSpec{*family, j.at("params").get<std::map<std::string, double>>()},
      [&] {
        std::istringstream in(j.at("pipeline").dump());
        return preprocess::FittedPipeline::deserialize(in);
      }(),
      [&] {
        std::istringstream in(j.at("model").dump());
        return learn::deserialize_model(in);
      }()};
  return artifact;
}

}  // namespace

int cmd_race(const RunConfig& config) {
  config.validate_common();
  // Grid problems must surface before any tuning compute starts.
  select::Grid grid;
  if (!config.grid_path.empty()) {
    std::ifstream in(config.grid_path);
    if (!in) throw ConfigError("cannot open grid file: " + config.grid_path);
    grid = select::Grid::load(in);
  } else {
    grid = select::default_grid();
  }

  const auto dataset = build_dataset(config);
  if (dataset.rows.empty()) throw RuntimeFailure("race: empty supervised dataset");

  select::RaceConfig rc;
  rc.min_resamples = config.min_resamples;
  rc.alpha = config.alpha;
  rc.pipeline = pipeline_config_of(config);

  std::vector<int> folds_override;
  const std::vector<int>* fold_assignment = nullptr;
  if (config.fold_strategy == "year_blocked") {
    folds_override = select::year_blocked_split(dataset, config.folds, config.seed);
    fold_assignment = &folds_override;
  }

  std::vector<select::TuningTraceEntry> trace;
  const auto tuned = select::adaptive_race(dataset, grid, config.folds, rc, config.seed,
                                           config.jobs, &trace, fold_assignment);

  std::vector<learn::ModelSpec> specs;
  for (const auto& [family, spec] : tuned) specs.push_back(spec);
  const auto result = select::horse_race(dataset, specs, config.folds, config.seed, config.jobs,
                                         rc.pipeline, fold_assignment);

  std::vector<std::string> outputs;
  const auto leaderboard_path = (fs::path(config.out_dir) / "leaderboard.csv").string();
  csv::write_file_atomic(leaderboard_path, select::export_leaderboard(result));
  outputs.push_back(leaderboard_path);

  {
    std::ostringstream out;
    out << "family,config_index,folds_completed,eliminated,mean_rmse\n";
    for (const auto& entry : trace)
      csv::write_row(out, {learn::family_name(entry.family), std::to_string(entry.config_index),
                           std::to_string(entry.folds_completed),
                           entry.eliminated ? "1" : "0", format_double(entry.mean_rmse)});
    const auto path = (fs::path(config.out_dir) / "tuning_trace.csv").string();
    csv::write_file_atomic(path, out.str());
    outputs.push_back(path);
  }

  // Refit the winner on the full dataset for the reusable artifact.
  const auto& winner = result.models[result.winner];
  preprocess::CellRows all_rows;
  std::vector<double> all_y;
  for (const auto& row : dataset.rows) {
    all_rows.push_back(&row.cells);
    all_y.push_back(row.target);
  }
  auto pipeline = preprocess::FittedPipeline::fit(dataset.feature_names, dataset.kinds, all_rows,
                                                  rc.pipeline);
  const auto X = pipeline.apply(all_rows);
  auto model = learn::fit_model(winner.spec, X, all_y,
                                derive_seed(config.seed, fnv1a_hash("final-fit")), config.jobs);
  model->feature_names = pipeline.output_feature_names();

  const auto model_path = (fs::path(config.out_dir) / "winner_model.json").string();
  write_winner_artifact(model_path, winner.spec, pipeline, *model, config.seed);
  outputs.push_back(model_path);

  write_manifest(config, "race", outputs);
  std::cout << "winner: " << winner.name << "\n";
  return 0;
}

int cmd_explain(const RunConfig& config, const std::string& model_path) {
  config.validate_common();
  require_file(model_path, "model artifact");
  auto artifact = load_winner_artifact(model_path);

  const auto dataset = build_dataset(config);
  if (dataset.rows.empty()) throw RuntimeFailure("explain: empty supervised dataset");
  preprocess::CellRows all_rows;
  for (const auto& row : dataset.rows) all_rows.push_back(&row.cells);
  const auto X = artifact.pipeline.apply(all_rows);

  if (artifact.pipeline.output_feature_names() != artifact.model->feature_names)
    throw RuntimeFailure("explain: model/dataset feature mismatch");
  if (X.cols() != artifact.model->input_width())
    throw RuntimeFailure("explain: model/dataset feature mismatch");

  // Background: seeded sample of dataset rows.
  const std::size_t budget = std::min<std::size_t>(config.shap_background, X.rows());
  std::vector<std::size_t> pick(X.rows());
  std::iota(pick.begin(), pick.end(), 0);
  Rng rng(derive_seed(config.seed, fnv1a_hash("shap-background")));
  rng.shuffle(pick);
  pick.resize(budget);
  std::sort(pick.begin(), pick.end());
  Matrix background(budget, X.cols());
  for (std::size_t b = 0; b < budget; ++b)
    std::copy(X.row(pick[b]), X.row(pick[b]) + X.cols(), background.row(b));

  const auto& names = artifact.model->feature_names;
  shap::ShapMatrix shap_matrix;
  if (X.cols() <= static_cast<std::size_t>(config.shap_exact_max_features)) {
    shap_matrix = shap::compute_exact(*artifact.model, X, background, names,
                                      config.shap_exact_max_features, config.jobs);
  } else {
    shap_matrix = shap::compute_sampled(*artifact.model, X, background, names,
                                        config.shap_permutations, config.seed, config.jobs);
  }

  std::vector<std::string> outputs;
  const auto importance = shap::mean_abs_importance(shap_matrix, config.top_k_importance);
  const auto importance_path = (fs::path(config.out_dir) / "shap_importance.csv").string();
  csv::write_file_atomic(importance_path,
                         shap::export_importance(importance, learn::family_name(artifact.spec.family)));
  outputs.push_back(importance_path);

  const auto beeswarm_path = (fs::path(config.out_dir) / "shap_beeswarm.csv").string();
  csv::write_file_atomic(beeswarm_path,
                         shap::export_beeswarm(shap_matrix, X, config.top_k_beeswarm));
  outputs.push_back(beeswarm_path);

  std::vector<std::string> dep_features = config.dependence_features;
  if (dep_features.empty()) {
    const auto top = shap::mean_abs_importance(shap_matrix, 5);
    for (const auto& entry : top) dep_features.push_back(entry.feature);
  }
  for (const auto& feature : dep_features) {
    const auto path =
        (fs::path(config.out_dir) / ("shap_dependence_" + sanitize_filename(feature) + ".csv"))
            .string();
    csv::write_file_atomic(path, shap::export_dependence(shap_matrix, X, feature));
    outputs.push_back(path);
  }

  write_manifest(config, "explain", outputs);
  return 0;
}

}  // namespace tradenet::cli
