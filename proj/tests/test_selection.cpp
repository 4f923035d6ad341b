#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "testutil.hpp"
#include "tradenet/common.hpp"
#include "tradenet/selection.hpp"

using namespace tradenet;
using namespace tradenet::select;
using panel::Cell;
using panel::FeatureKind;

namespace {

// Fully observed numeric dataset y = f(x) + noise.
panel::SupervisedDataset make_dataset(std::size_t n, std::size_t p, std::uint64_t seed,
                                      double (*fn)(const std::vector<double>&), double noise) {
  panel::SupervisedDataset dataset;
  for (std::size_t j = 0; j < p; ++j) {
    dataset.feature_names.push_back("f" + std::to_string(j));
    dataset.kinds.push_back(FeatureKind::kNumeric);
  }
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    panel::DatasetRow row;
    row.country = "AAA";
    row.target_year = 2000 + static_cast<int>(i);
    std::vector<double> x(p);
    for (std::size_t j = 0; j < p; ++j) {
      x[j] = rng.normal();
      row.cells.push_back(Cell::number(x[j]));
    }
    row.target = fn(x) + noise * rng.normal();
    dataset.rows.push_back(std::move(row));
  }
  return dataset;
}

double linear_fn(const std::vector<double>& x) { return 10.0 * x[0] - 4.0 * x[1]; }

}  // namespace

TEST_CASE("kfold sizes differ by at most one and cover every row") {
  const auto even = kfold_split(10, 5, 1);
  std::map<int, int> counts;
  for (const int f : even) counts[f]++;
  REQUIRE(counts.size() == 5);
  for (const auto& [fold, count] : counts) CHECK(count == 2);

  const auto uneven = kfold_split(10, 3, 1);
  std::map<int, int> counts3;
  for (const int f : uneven) counts3[f]++;
  std::multiset<int> sizes;
  for (const auto& [fold, count] : counts3) sizes.insert(count);
  CHECK(sizes == std::multiset<int>{3, 3, 4});
}

TEST_CASE("kfold is deterministic under the seed and validates inputs") {
  CHECK(kfold_split(100, 10, 7) == kfold_split(100, 10, 7));
  CHECK(kfold_split(100, 10, 7) != kfold_split(100, 10, 8));
  CHECK_THROWS_AS(kfold_split(5, 6, 1), ConfigError);
  CHECK_THROWS_AS(kfold_split(5, 1, 1), ConfigError);
}

TEST_CASE("score formulas") {
  const std::vector<double> y = {1.0, 2.0, 3.0};
  SUBCASE("perfect prediction zeroes every metric") {
    for (const auto metric : {Metric::kHuber, Metric::kMae, Metric::kRmse, Metric::kSmape})
      CHECK(score(y, y, metric) == 0.0);
  }
  SUBCASE("constant error of one") {
    const std::vector<double> pred = {2.0, 3.0, 4.0};
    CHECK(score(y, pred, Metric::kHuber) == doctest::Approx(0.5));
    CHECK(score(y, pred, Metric::kMae) == doctest::Approx(1.0));
    CHECK(score(y, pred, Metric::kRmse) == doctest::Approx(1.0));
  }
  SUBCASE("smape hand computation and 0/0 convention") {
    CHECK(score({100.0}, {50.0}, Metric::kSmape) == doctest::Approx(100.0 * 2.0 * 50.0 / 150.0));
    CHECK(score({0.0}, {0.0}, Metric::kSmape) == 0.0);
    CHECK(score({0.0, 1.0}, {0.0, 1.0}, Metric::kSmape) == 0.0);
  }
  SUBCASE("huber blends quadratic and linear regions") {
    // errors 0.5 (quadratic: 0.125) and 3 (linear: 1*(3-0.5)=2.5)
    CHECK(score({0.0, 0.0}, {0.5, 3.0}, Metric::kHuber) ==
          doctest::Approx((0.125 + 2.5) / 2.0));
  }
  SUBCASE("length mismatch is an error") {
    CHECK_THROWS_AS(score({1.0}, {1.0, 2.0}, Metric::kMae), RuntimeFailure);
  }
  SUBCASE("rmse dominates mae and smape stays within [0, 200]") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> truth(20), pred(20);
      for (std::size_t i = 0; i < 20; ++i) {
        truth[i] = rng.normal() * 10;
        pred[i] = rng.normal() * 10;
      }
      CHECK(score(truth, pred, Metric::kRmse) >= score(truth, pred, Metric::kMae));
      const double smape = score(truth, pred, Metric::kSmape);
      CHECK(smape >= 0.0);
      CHECK(smape <= 200.0);
    }
  }
}

TEST_CASE("grid loading validates families and parameters") {
  std::istringstream good(R"({"ols": [{}], "knn": [{"neighbors": 3}]})");
  const auto grid = Grid::load(good);
  CHECK(grid.configs.size() == 2);

  std::istringstream unknown_family(R"({"mystery": [{}]})");
  CHECK_THROWS_AS(Grid::load(unknown_family), ConfigError);
  std::istringstream unknown_param(R"({"ols": [{"trees": 5}]})");
  CHECK_THROWS_AS(Grid::load(unknown_param), ConfigError);
  std::istringstream empty_family(R"({"ols": []})");
  CHECK_THROWS_AS(Grid::load(empty_family), ConfigError);
}

TEST_CASE("a grid of one returns that configuration with full evaluation") {
  const auto dataset = make_dataset(60, 3, 11, linear_fn, 0.5);
  Grid grid;
  grid.configs[learn::Family::kKnn] = {{{"neighbors", 3}}};
  std::vector<TuningTraceEntry> trace;
  const auto winners = adaptive_race(dataset, grid, 5, RaceConfig{}, 2, 1, &trace);
  REQUIRE(winners.size() == 1);
  CHECK(winners.at(learn::Family::kKnn).param("neighbors", 0) == 3);
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].folds_completed == 5);
  CHECK_FALSE(trace[0].eliminated);
}

TEST_CASE("a strictly dominated configuration is eliminated at min_resamples") {
  // Strong linear signal: a near-zero penalty wins, a huge penalty predicts
  // the mean and loses by ~sd(y) RMSE units on every fold.
  const auto dataset = make_dataset(120, 3, 12, linear_fn, 0.1);
  Grid grid;
  grid.configs[learn::Family::kEnet] = {
      {{"penalty", 1e-6}, {"mixture", 0.5}},
      {{"penalty", 1e9}, {"mixture", 1.0}},
  };
  RaceConfig config;
  config.min_resamples = 4;
  config.alpha = 0.05;
  std::vector<TuningTraceEntry> trace;
  const auto winners = adaptive_race(dataset, grid, 8, config, 3, 1, &trace);
  CHECK(winners.at(learn::Family::kEnet).param("penalty", -1) == doctest::Approx(1e-6));
  REQUIRE(trace.size() == 2);
  CHECK_FALSE(trace[0].eliminated);
  CHECK(trace[0].folds_completed == 8);
  CHECK(trace[1].eliminated);
  CHECK(trace[1].folds_completed == 4);  // killed right after min_resamples
}

TEST_CASE("alpha zero disables elimination and matches exhaustive search") {
  const auto dataset = make_dataset(80, 3, 13, linear_fn, 1.0);
  Grid grid;
  grid.configs[learn::Family::kKnn] = {
      {{"neighbors", 1}}, {{"neighbors", 5}}, {{"neighbors", 20}}};
  RaceConfig config;
  config.alpha = 0.0;
  std::vector<TuningTraceEntry> trace;
  const auto winners = adaptive_race(dataset, grid, 6, config, 4, 1, &trace);
  REQUIRE(trace.size() == 3);
  double best_mean = 1e300;
  std::size_t best_config = 99;
  for (const auto& entry : trace) {
    CHECK(entry.folds_completed == 6);  // nobody eliminated
    CHECK_FALSE(entry.eliminated);
    if (entry.mean_rmse < best_mean) {
      best_mean = entry.mean_rmse;
      best_config = entry.config_index;
    }
  }
  CHECK(winners.at(learn::Family::kKnn).param("neighbors", 0) ==
        grid.configs.at(learn::Family::kKnn)[best_config].at("neighbors"));
}

TEST_CASE("identical specs tie to the earlier index with identical scores") {
  const auto dataset = make_dataset(50, 2, 14, linear_fn, 0.3);
  const std::vector<learn::ModelSpec> specs = {{learn::Family::kOls, {}},
                                               {learn::Family::kOls, {}}};
  const auto result = horse_race(dataset, specs, 5, 21);
  CHECK(result.winner == 0);
  CHECK(result.models[0].name == "ols");
  CHECK(result.models[1].name == "ols_2");
  for (const auto metric : {Metric::kHuber, Metric::kMae, Metric::kRmse, Metric::kSmape}) {
    CHECK(result.models[0].metrics.at(metric).mean ==
          result.models[1].metrics.at(metric).mean);
    CHECK(result.models[0].metrics.at(metric).fold_scores ==
          result.models[1].metrics.at(metric).fold_scores);
  }
}

TEST_CASE("confidence interval half-width shrinks from 5 to 10 folds") {
  const auto dataset = make_dataset(200, 3, 15, linear_fn, 1.0);
  const std::vector<learn::ModelSpec> specs = {{learn::Family::kOls, {}},
                                               {learn::Family::kKnn, {{"neighbors", 7}}}};
  const auto r5 = horse_race(dataset, specs, 5, 30);
  const auto r10 = horse_race(dataset, specs, 10, 30);
  const auto& m5 = r5.models[0].metrics.at(Metric::kRmse);
  const auto& m10 = r10.models[0].metrics.at(Metric::kRmse);
  CHECK(m10.ci_high - m10.ci_low < m5.ci_high - m5.ci_low);
}

TEST_CASE("a failing family is recorded and the race survives") {
  const auto dataset = make_dataset(40, 2, 16, linear_fn, 0.5);
  const std::vector<learn::ModelSpec> specs = {
      {learn::Family::kOls, {}},
      {learn::Family::kKnn, {{"neighbors", 500}}},  // k > fold rows, must fail
      {learn::Family::kEnet, {{"penalty", 0.01}, {"mixture", 0.5}}},
  };
  const auto result = horse_race(dataset, specs, 4, 5);
  CHECK_FALSE(result.models[0].failed);
  CHECK(result.models[1].failed);
  CHECK_FALSE(result.models[2].failed);
  CHECK(result.winner != 1);

  // With only one survivor the race is an error.
  const std::vector<learn::ModelSpec> doomed = {
      {learn::Family::kOls, {}}, {learn::Family::kKnn, {{"neighbors", 500}}}};
  CHECK_THROWS_AS(horse_race(dataset, doomed, 4, 5), RuntimeFailure);
  CHECK_THROWS_AS(horse_race(dataset, {{learn::Family::kOls, {}}}, 4, 5), ConfigError);
}

TEST_CASE("leaderboard export carries all four metrics per model") {
  const auto dataset = make_dataset(50, 2, 17, linear_fn, 0.5);
  const std::vector<learn::ModelSpec> specs = {{learn::Family::kOls, {}},
                                               {learn::Family::kKnn, {{"neighbors", 5}}}};
  const auto result = horse_race(dataset, specs, 5, 8);
  const auto text = export_leaderboard(result);
  CHECK(text.find("model,metric,mean,ci_low,ci_high") == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 9);  // header + 2 models x 4 metrics
  CHECK(text.find("ols,rmse,") != std::string::npos);
  CHECK(text.find("knn,smape,") != std::string::npos);
}

TEST_CASE("race results are identical for any job count") {
  const auto dataset = make_dataset(80, 4, 18, linear_fn, 0.8);
  Grid grid;
  grid.configs[learn::Family::kKnn] = {{{"neighbors", 3}}, {{"neighbors", 9}}};
  grid.configs[learn::Family::kRForest] = {{{"trees", 10}}};
  const auto w1 = adaptive_race(dataset, grid, 5, RaceConfig{}, 6, 1);
  const auto w8 = adaptive_race(dataset, grid, 5, RaceConfig{}, 6, 8);
  CHECK(w1.at(learn::Family::kKnn).params == w8.at(learn::Family::kKnn).params);

  const std::vector<learn::ModelSpec> specs = {{learn::Family::kOls, {}},
                                               {learn::Family::kRForest, {{"trees", 10}}}};
  const auto r1 = horse_race(dataset, specs, 5, 6, 1);
  const auto r8 = horse_race(dataset, specs, 5, 6, 8);
  CHECK(export_leaderboard(r1) == export_leaderboard(r8));
}

TEST_CASE("year-blocked splitter keeps whole years together") {
  const auto dataset = make_dataset(40, 2, 20, linear_fn, 0.5);  // years 2000..2039
  const auto folds = year_blocked_split(dataset, 4, 3);
  std::map<int, std::set<int>> folds_of_year;
  for (std::size_t i = 0; i < dataset.rows.size(); ++i)
    folds_of_year[dataset.rows[i].target_year].insert(folds[i]);
  for (const auto& [year, fold_set] : folds_of_year) CHECK(fold_set.size() == 1);
  CHECK(year_blocked_split(dataset, 4, 3) == folds);

  auto two_years = make_dataset(10, 2, 21, linear_fn, 0.5);
  for (auto& row : two_years.rows) row.target_year = 2000 + (row.target_year % 2);
  CHECK_THROWS_AS(year_blocked_split(two_years, 4, 1), ConfigError);
}

TEST_CASE("mutating a validation row leaves the fold's fitted pipeline unchanged") {
  auto dataset = make_dataset(60, 3, 19, linear_fn, 0.5);
  const auto folds = kfold_split(dataset.rows.size(), 5, 44);

  auto fit_fold_pipeline = [&](int fold) {
    preprocess::CellRows train_rows;
    for (std::size_t i = 0; i < dataset.rows.size(); ++i)
      if (folds[i] != fold) train_rows.push_back(&dataset.rows[i].cells);
    return preprocess::FittedPipeline::fit(dataset.feature_names, dataset.kinds, train_rows);
  };

  const auto before = fit_fold_pipeline(0).serialize();
  std::size_t victim = 0;
  while (folds[victim] != 0) ++victim;  // a fold-0 validation row
  dataset.rows[victim].cells[0] = Cell::number(1e6);
  dataset.rows[victim].target = -1e6;
  const auto after = fit_fold_pipeline(0).serialize();
  CHECK(before == after);
}
