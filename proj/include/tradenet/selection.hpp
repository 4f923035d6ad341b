#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tradenet/learners.hpp"
#include "tradenet/panel.hpp"
#include "tradenet/preprocess.hpp"

namespace tradenet::select {

// Hyperparameter grid: family -> candidate configurations.
struct Grid {
  std::map<learn::Family, std::vector<std::map<std::string, double>>> configs;

  static Grid load(std::istream& in);  // JSON: {"family": [{param: value}, ...]}
};

// One sensible configuration per family, used when no grid file is given.
Grid default_grid();

// Deterministic fold assignment; sizes differ by at most one.
std::vector<int> kfold_split(std::size_t n, int k, std::uint64_t seed);

// Alternative time-aware splitter: whole target years are assigned to folds,
// so a year never straddles the train/validation boundary. Needs at least k
// distinct target years.
std::vector<int> year_blocked_split(const panel::SupervisedDataset& dataset, int k,
                                    std::uint64_t seed);

enum class Metric { kHuber, kMae, kRmse, kSmape };

std::string metric_name(Metric metric);

double score(const std::vector<double>& y, const std::vector<double>& predicted, Metric metric,
             double huber_delta = 1.0);

struct RaceConfig {
  int min_resamples = 4;
  double alpha = 0.05;
  preprocess::PipelineConfig pipeline;
};

struct TuningTraceEntry {
  learn::Family family;
  std::size_t config_index = 0;
  int folds_completed = 0;
  bool eliminated = false;
  double mean_rmse = 0.0;
};

// Fold-by-fold racing with futility elimination: after min_resamples folds, a
// configuration whose paired one-sided t-test against the current best RMSE
// rejects at alpha stops evaluating. alpha = 0 reduces to exhaustive search.
// Preprocessing is refit inside each training fold.
std::map<learn::Family, learn::ModelSpec> adaptive_race(
    const panel::SupervisedDataset& dataset, const Grid& grid, int folds,
    const RaceConfig& config, std::uint64_t seed, int jobs = 1,
    std::vector<TuningTraceEntry>* trace = nullptr,
    const std::vector<int>* fold_assignment = nullptr);

struct MetricSummary {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> fold_scores;
};

struct ModelResult {
  std::string name;
  learn::ModelSpec spec;
  bool failed = false;
  std::string failure;
  std::map<Metric, MetricSummary> metrics;
};

struct RaceResult {
  std::vector<ModelResult> models;
  int winner = -1;  // index into models; lowest mean RMSE
};

// Scores every spec on identical folds and identical per-fold preprocessing;
// all four metrics with mean and 95% confidence intervals (Student-t over
// fold scores). A family that fails to fit is recorded and the race goes on
// while at least two models survive.
RaceResult horse_race(const panel::SupervisedDataset& dataset,
                      const std::vector<learn::ModelSpec>& specs, int folds, std::uint64_t seed,
                      int jobs = 1, const preprocess::PipelineConfig& pipeline_config = {},
                      const std::vector<int>* fold_assignment = nullptr);

// model,metric,mean,ci_low,ci_high
std::string export_leaderboard(const RaceResult& result);

}  // namespace tradenet::select
