#include "tradenet/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "tradenet/common.hpp"
#include "tradenet/csv.hpp"

namespace tradenet::select {

Grid Grid::load(std::istream& in) {
  nlohmann::json j;
  in >> j;
  if (!j.is_object()) throw ConfigError("grid file: expected a JSON object");
  Grid grid;
  for (const auto& [name, configs] : j.items()) {
    const auto family = learn::family_from_name(name);
    if (!family) throw ConfigError("grid file: unknown family '" + name + "'");
    if (!configs.is_array() || configs.empty())
      throw ConfigError("grid file: family '" + name + "' needs a nonempty array");
    for (const auto& entry : configs) {
      std::map<std::string, double> params;
      for (const auto& [key, value] : entry.items()) {
        if (!value.is_number())
          throw ConfigError("grid file: hyperparameter '" + key + "' must be numeric");
        params[key] = value.get<double>();
      }
      learn::ModelSpec spec{*family, params};
      spec.validate();  // reject bad names/ranges before any compute
      grid.configs[*family].push_back(std::move(params));
    }
  }
  if (grid.configs.empty()) throw ConfigError("grid file: no families configured");
  return grid;
}

Grid default_grid() {
  Grid grid;
  grid.configs[learn::Family::kOls] = {{}};
  grid.configs[learn::Family::kEnet] = {{{"penalty", 0.001}, {"mixture", 0.5}}};
  grid.configs[learn::Family::kSvrRbf] = {{{"cost", 1.0}, {"epsilon", 0.1}}};
  grid.configs[learn::Family::kKnn] = {{{"neighbors", 11}, {"distance_power", 2.0}}};
  grid.configs[learn::Family::kRForest] = {
      {{"trees", 100}, {"mtry", 0}, {"min_node_size", 5}}};
  grid.configs[learn::Family::kGbtLevel] = {
      {{"trees", 150}, {"learning_rate", 0.1}, {"max_depth", 6}, {"lambda", 1.0}}};
  grid.configs[learn::Family::kGbtLeaf] = {{{"trees", 150},
                                            {"learning_rate", 0.1},
                                            {"max_leaves", 31},
                                            {"n_bins", 255},
                                            {"lambda", 1.0}}};
  return grid;
}

std::vector<int> kfold_split(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("kfold_split: k must be >= 2");
  if (static_cast<std::size_t>(k) > n)
    throw ConfigError("kfold_split: k exceeds row count (" + std::to_string(k) + " > " +
                      std::to_string(n) + ")");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x6b666f6cULL));
  rng.shuffle(order);

  std::vector<int> fold(n, 0);
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold[order[pos++]] = f;
  }
  return fold;
}

std::vector<int> year_blocked_split(const panel::SupervisedDataset& dataset, int k,
                                    std::uint64_t seed) {
  std::set<int> year_set;
  for (const auto& row : dataset.rows) year_set.insert(row.target_year);
  if (static_cast<int>(year_set.size()) < k)
    throw ConfigError("year_blocked_split: fewer distinct target years than folds");

  std::vector<int> years(year_set.begin(), year_set.end());
  Rng rng(derive_seed(seed, 0x79656172ULL));
  rng.shuffle(years);
  std::map<int, int> fold_of_year;
  for (std::size_t i = 0; i < years.size(); ++i)
    fold_of_year[years[i]] = static_cast<int>(i % static_cast<std::size_t>(k));

  std::vector<int> fold(dataset.rows.size());
  for (std::size_t i = 0; i < dataset.rows.size(); ++i)
    fold[i] = fold_of_year.at(dataset.rows[i].target_year);
  return fold;
}

std::string metric_name(Metric metric) {
  switch (metric) {
    case Metric::kHuber: return "huber";
    case Metric::kMae: return "mae";
    case Metric::kRmse: return "rmse";
    case Metric::kSmape: return "smape";
  }
  return "?";
}

double score(const std::vector<double>& y, const std::vector<double>& predicted, Metric metric,
             double huber_delta) {
  if (y.size() != predicted.size()) throw RuntimeFailure("score: length mismatch");
  if (y.empty()) throw RuntimeFailure("score: empty vectors");
  const double n = static_cast<double>(y.size());
  double acc = 0.0;
  switch (metric) {
    case Metric::kHuber:
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = std::abs(y[i] - predicted[i]);
        acc += e <= huber_delta ? 0.5 * e * e : huber_delta * (e - 0.5 * huber_delta);
      }
      return acc / n;
    case Metric::kMae:
      for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs(y[i] - predicted[i]);
      return acc / n;
    case Metric::kRmse:
      for (std::size_t i = 0; i < y.size(); ++i)
        acc += (y[i] - predicted[i]) * (y[i] - predicted[i]);
      return std::sqrt(acc / n);
    case Metric::kSmape:
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double denom = std::abs(y[i]) + std::abs(predicted[i]);
        if (denom > 0.0) acc += 2.0 * std::abs(y[i] - predicted[i]) / denom;
      }
      return acc / n * 100.0;
  }
  throw ConfigError("unknown metric");
}

namespace {

struct FoldData {
  Matrix train_x, val_x;
  std::vector<double> train_y, val_y;
};

// Pipelines are fit per training fold once and shared across all specs, so
// every model sees byte-identical partitions and preprocessing.
std::vector<FoldData> prepare_folds(const panel::SupervisedDataset& dataset,
                                    const std::vector<int>& fold_of, int folds,
                                    const preprocess::PipelineConfig& pipeline_config,
                                    int jobs) {
  std::vector<FoldData> out(folds);
  parallel_for(static_cast<std::size_t>(folds), jobs, [&](std::size_t f) {
    preprocess::CellRows train_rows, val_rows;
    std::vector<double> train_y, val_y;
    for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
      if (fold_of[i] == static_cast<int>(f)) {
        val_rows.push_back(&dataset.rows[i].cells);
        val_y.push_back(dataset.rows[i].target);
      } else {
        train_rows.push_back(&dataset.rows[i].cells);
        train_y.push_back(dataset.rows[i].target);
      }
    }
    const auto pipeline = preprocess::FittedPipeline::fit(dataset.feature_names, dataset.kinds,
                                                          train_rows, pipeline_config);
    out[f].train_x = pipeline.apply(train_rows);
    out[f].val_x = pipeline.apply(val_rows);
    out[f].train_y = std::move(train_y);
    out[f].val_y = std::move(val_y);
  });
  return out;
}

std::uint64_t fit_seed(std::uint64_t seed, learn::Family family, std::size_t config_index,
                       int fold) {
  const std::string key = learn::family_name(family) + "/" + std::to_string(config_index) + "/" +
                          std::to_string(fold);
  return derive_seed(seed, fnv1a_hash(key));
}

double mean_of(const std::vector<double>& values) {
  double acc = 0.0;
  for (const double v : values) acc += v;
  return values.empty() ? 0.0 : acc / static_cast<double>(values.size());
}

double sample_sd(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

// One-sided paired t-test p-value for H1: mean(diff) > 0.
double paired_one_sided_p(const std::vector<double>& diffs) {
  const std::size_t n = diffs.size();
  if (n < 2) return 1.0;
  const double mean = mean_of(diffs);
  const double sd = sample_sd(diffs, mean);
  if (sd == 0.0) return mean > 0.0 ? 0.0 : 1.0;
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return 1.0 - boost::math::cdf(dist, t);
}

}  // namespace

std::map<learn::Family, learn::ModelSpec> adaptive_race(
    const panel::SupervisedDataset& dataset, const Grid& grid, int folds,
    const RaceConfig& config, std::uint64_t seed, int jobs,
    std::vector<TuningTraceEntry>* trace, const std::vector<int>* fold_assignment) {
  if (grid.configs.empty()) throw ConfigError("adaptive_race: empty grid");
  if (folds < config.min_resamples)
    throw ConfigError("adaptive_race: folds must be >= min_resamples");

  const auto fold_of =
      fold_assignment ? *fold_assignment : kfold_split(dataset.rows.size(), folds, seed);
  const auto fold_data = prepare_folds(dataset, fold_of, folds, config.pipeline, jobs);

  std::map<learn::Family, learn::ModelSpec> winners;
  for (const auto& [family, configs] : grid.configs) {
    const std::size_t n_configs = configs.size();
    std::vector<std::vector<double>> rmse(n_configs);  // per config, per completed fold
    std::vector<bool> active(n_configs, true);

    for (int f = 0; f < folds; ++f) {
      std::vector<std::size_t> to_run;
      for (std::size_t c = 0; c < n_configs; ++c)
        if (active[c]) to_run.push_back(c);

      std::vector<double> fold_rmse(n_configs, 0.0);
      parallel_for(to_run.size(), jobs, [&](std::size_t slot) {
        const std::size_t c = to_run[slot];
        const learn::ModelSpec spec{family, configs[c]};
        const auto& data = fold_data[f];
        const auto model =
            learn::fit_model(spec, data.train_x, data.train_y, fit_seed(seed, family, c, f), 1);
        fold_rmse[c] = score(data.val_y, model->predict(data.val_x), Metric::kRmse);
      });
      for (const std::size_t c : to_run) rmse[c].push_back(fold_rmse[c]);

      const int completed = f + 1;
      if (completed >= config.min_resamples && completed < folds) {
        // Current best among survivors by mean RMSE so far.
        std::size_t best = n_configs;
        double best_mean = 0.0;
        for (std::size_t c = 0; c < n_configs; ++c) {
          if (!active[c]) continue;
          const double mean = mean_of(rmse[c]);
          if (best == n_configs || mean < best_mean) {
            best = c;
            best_mean = mean;
          }
        }
        for (std::size_t c = 0; c < n_configs; ++c) {
          if (!active[c] || c == best) continue;
          std::vector<double> diffs(rmse[c].size());
          for (std::size_t i = 0; i < diffs.size(); ++i) diffs[i] = rmse[c][i] - rmse[best][i];
          if (paired_one_sided_p(diffs) < config.alpha) active[c] = false;
        }
      }
    }

    std::size_t winner = 0;
    double winner_mean = 0.0;
    bool have_winner = false;
    for (std::size_t c = 0; c < n_configs; ++c) {
      if (!active[c]) continue;
      const double mean = mean_of(rmse[c]);
      if (!have_winner || mean < winner_mean) {
        winner = c;
        winner_mean = mean;
        have_winner = true;
      }
    }
    if (trace) {
      for (std::size_t c = 0; c < n_configs; ++c)
        trace->push_back({family, c, static_cast<int>(rmse[c].size()), !active[c],
                          mean_of(rmse[c])});
    }
    winners.emplace(family, learn::ModelSpec{family, configs[winner]});
  }
  return winners;
}

RaceResult horse_race(const panel::SupervisedDataset& dataset,
                      const std::vector<learn::ModelSpec>& specs, int folds, std::uint64_t seed,
                      int jobs, const preprocess::PipelineConfig& pipeline_config,
                      const std::vector<int>* fold_assignment) {
  if (specs.size() < 2) throw ConfigError("horse_race: need at least 2 model specs");
  const auto fold_of =
      fold_assignment ? *fold_assignment : kfold_split(dataset.rows.size(), folds, seed);
  const auto fold_data = prepare_folds(dataset, fold_of, folds, pipeline_config, jobs);

  RaceResult result;
  result.models.resize(specs.size());
  std::map<std::string, int> name_counts;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    std::string name = learn::family_name(specs[s].family);
    const int count = ++name_counts[name];
    if (count > 1) name += "_" + std::to_string(count);
    result.models[s].name = name;
    result.models[s].spec = specs[s];
  }

  // (spec, fold) tasks write into fixed slots; merge order never varies.
  struct Slot {
    std::vector<double> predicted;
    bool failed = false;
    std::string failure;
  };
  std::vector<Slot> slots(specs.size() * static_cast<std::size_t>(folds));
  parallel_for(slots.size(), jobs, [&](std::size_t task) {
    const std::size_t s = task / static_cast<std::size_t>(folds);
    const int f = static_cast<int>(task % static_cast<std::size_t>(folds));
    const auto& data = fold_data[f];
    try {
      const auto model = learn::fit_model(specs[s], data.train_x, data.train_y,
                                          fit_seed(seed, specs[s].family, s, f), 1);
      slots[task].predicted = model->predict(data.val_x);
    } catch (const std::exception& e) {
      slots[task].failed = true;
      slots[task].failure = e.what();
    }
  });

  int survivors = 0;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    auto& model_result = result.models[s];
    for (int f = 0; f < folds; ++f) {
      const auto& slot = slots[s * static_cast<std::size_t>(folds) + f];
      if (slot.failed) {
        model_result.failed = true;
        model_result.failure = slot.failure;
        break;
      }
    }
    if (model_result.failed) continue;
    ++survivors;

    for (const Metric metric : {Metric::kHuber, Metric::kMae, Metric::kRmse, Metric::kSmape}) {
      MetricSummary summary;
      for (int f = 0; f < folds; ++f) {
        const auto& slot = slots[s * static_cast<std::size_t>(folds) + f];
        summary.fold_scores.push_back(score(fold_data[f].val_y, slot.predicted, metric));
      }
      summary.mean = mean_of(summary.fold_scores);
      const double sd = sample_sd(summary.fold_scores, summary.mean);
      double half = 0.0;
      if (summary.fold_scores.size() > 1 && sd > 0.0) {
        const boost::math::students_t dist(static_cast<double>(summary.fold_scores.size() - 1));
        half = boost::math::quantile(dist, 0.975) * sd /
               std::sqrt(static_cast<double>(summary.fold_scores.size()));
      }
      summary.ci_low = summary.mean - half;
      summary.ci_high = summary.mean + half;
      model_result.metrics.emplace(metric, std::move(summary));
    }
  }
  if (survivors < 2) throw RuntimeFailure("horse_race: fewer than 2 models fit successfully");

  for (std::size_t s = 0; s < specs.size(); ++s) {
    if (result.models[s].failed) continue;
    const double mean = result.models[s].metrics.at(Metric::kRmse).mean;
    if (result.winner < 0 || mean < result.models[result.winner].metrics.at(Metric::kRmse).mean)
      result.winner = static_cast<int>(s);
  }
  return result;
}

std::string export_leaderboard(const RaceResult& result) {
  std::ostringstream out;
  out << "model,metric,mean,ci_low,ci_high\n";
  for (const auto& model : result.models) {
    if (model.failed) continue;
    for (const Metric metric : {Metric::kHuber, Metric::kMae, Metric::kRmse, Metric::kSmape}) {
      const auto& summary = model.metrics.at(metric);
      csv::write_row(out, {model.name, metric_name(metric), format_double(summary.mean),
                           format_double(summary.ci_low), format_double(summary.ci_high)});
    }
  }
  return out.str();
}

}  // namespace tradenet::select
