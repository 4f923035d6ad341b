#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tradenet/commands.hpp"
#include "tradenet/common.hpp"

namespace {

struct GlobalFlags {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int jobs = 0;
};

tradenet::cli::RunConfig load_config(const GlobalFlags& flags) {
  if (flags.config_path.empty()) throw tradenet::ConfigError("--config is required");
  auto config = tradenet::cli::RunConfig::load(flags.config_path);
  if (flags.seed >= 0) {
    config.seed = static_cast<std::uint64_t>(flags.seed);
    config.seed_set = true;
  }
  if (flags.jobs > 0) config.jobs = flags.jobs;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Section-level trade networks, topology metrics, and GDP growth forecasting"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "Run configuration file (JSON)");
  app.add_option("--seed", flags.seed, "Override the config seed");
  app.add_option("--jobs", flags.jobs, "Worker cap (results are identical for any value)");
  app.add_option("--out", flags.out_dir, "Override the output directory");

  auto* build = app.add_subcommand("build-networks",
                                   "Build per-(section,period) networks, metric series and "
                                   "relevance shares");

  auto* rank = app.add_subcommand("rank", "Normalized centrality ranking for a section/year");
  int rank_section = 0, rank_year = 0, rank_top_k = 10;
  rank->add_option("--section", rank_section, "HS section (1-21)")->required();
  rank->add_option("--year", rank_year, "Calendar year")->required();
  rank->add_option("--top-k", rank_top_k, "Entries to report (default 10)");

  auto* panel = app.add_subcommand("panel", "Assemble the country-year feature panel");
  auto* race = app.add_subcommand("race", "Tune hyperparameters and run the model horse race");

  auto* explain = app.add_subcommand("explain", "Shapley-value exports for a trained model");
  std::string model_path;
  explain->add_option("--model", model_path, "Winner artifact from 'race'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const auto config = load_config(flags);
    if (build->parsed()) return tradenet::cli::cmd_build_networks(config);
    if (rank->parsed()) return tradenet::cli::cmd_rank(config, rank_section, rank_year, rank_top_k);
    if (panel->parsed()) return tradenet::cli::cmd_panel(config);
    if (race->parsed()) return tradenet::cli::cmd_race(config);
    if (explain->parsed()) return tradenet::cli::cmd_explain(config, model_path);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const tradenet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
