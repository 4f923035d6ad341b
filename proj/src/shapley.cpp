#include "tradenet/shapley.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tradenet/common.hpp"
#include "tradenet/csv.hpp"

namespace tradenet::shap {

namespace {

double mean_prediction(const learn::TrainedModel& model, const Matrix& rows) {
  const auto pred = model.predict(rows);
  double acc = 0.0;
  for (const double v : pred) acc += v;
  return acc / static_cast<double>(pred.size());
}

}  // namespace

std::vector<double> exact_shapley(const learn::TrainedModel& model, const double* x,
                                  const Matrix& background, int max_features) {
  const std::size_t n = model.input_width();
  if (background.rows() == 0) throw ConfigError("exact_shapley: empty background");
  if (background.cols() != n)
    throw RuntimeFailure("exact_shapley: background width does not match the model");
  if (n > static_cast<std::size_t>(max_features))
    throw ConfigError("exact_shapley: " + std::to_string(n) + " features exceed the exact cap of " +
                      std::to_string(max_features) + "; use sampled_shapley");

  // v(S) for every coalition mask: mean prediction with features outside S
  // replaced by background values.
  const std::size_t n_masks = std::size_t{1} << n;
  std::vector<double> v(n_masks);
  Matrix batch(background.rows(), n);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    for (std::size_t b = 0; b < background.rows(); ++b) {
      double* row = batch.row(b);
      const double* bg = background.row(b);
      for (std::size_t j = 0; j < n; ++j) row[j] = (mask >> j) & 1 ? x[j] : bg[j];
    }
    v[mask] = mean_prediction(model, batch);
  }

  // Coalition weights |S|!(n-|S|-1)!/n! in log space.
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                         std::lgamma(static_cast<double>(n - s)) -
                         std::lgamma(static_cast<double>(n) + 1.0));
  }

  std::vector<int> popcount(n_masks, 0);
  for (std::size_t mask = 1; mask < n_masks; ++mask)
    popcount[mask] = popcount[mask >> 1] + static_cast<int>(mask & 1);

  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      phi[i] += weight[popcount[mask]] * (v[mask | bit] - v[mask]);
    }
  }
  return phi;
}

SampledShap sampled_shapley(const learn::TrainedModel& model, const double* x,
                            const Matrix& background, int n_permutations, std::uint64_t seed) {
  if (n_permutations < 1) throw ConfigError("sampled_shapley: n_permutations must be >= 1");
  if (background.rows() == 0) throw ConfigError("sampled_shapley: empty background");
  const std::size_t n = model.input_width();
  if (background.cols() != n)
    throw RuntimeFailure("sampled_shapley: background width does not match the model");

  Rng rng(derive_seed(seed, 0x73686170ULL));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
  Matrix walk(n + 1, n);  // row k = background with the first k features of
                          // the permutation switched to x
  for (int p = 0; p < n_permutations; ++p) {
    const std::size_t b = rng.bounded(background.rows());
    rng.shuffle(order);

    const double* bg = background.row(b);
    double* row = walk.row(0);
    std::copy(bg, bg + n, row);
    for (std::size_t k = 0; k < n; ++k) {
      double* next = walk.row(k + 1);
      std::copy(walk.row(k), walk.row(k) + n, next);
      next[order[k]] = x[order[k]];
    }
    const auto pred = model.predict(walk);
    for (std::size_t k = 0; k < n; ++k) {
      const double marginal = pred[k + 1] - pred[k];
      sum[order[k]] += marginal;
      sum_sq[order[k]] += marginal * marginal;
    }
  }

  SampledShap out;
  out.phi.resize(n);
  out.se.resize(n);
  const double pd = static_cast<double>(n_permutations);
  for (std::size_t j = 0; j < n; ++j) {
    out.phi[j] = sum[j] / pd;
    const double var =
        n_permutations > 1 ? std::max(0.0, (sum_sq[j] - sum[j] * sum[j] / pd) / (pd - 1.0)) : 0.0;
    out.se[j] = std::sqrt(var / pd);
  }
  return out;
}

ShapMatrix compute_exact(const learn::TrainedModel& model, const Matrix& X,
                         const Matrix& background, const std::vector<std::string>& feature_names,
                         int max_features, int jobs) {
  if (X.cols() != model.input_width())
    throw RuntimeFailure("compute_exact: observation width does not match the model");
  ShapMatrix shap;
  shap.feature_names = feature_names;
  shap.base_value = mean_prediction(model, background);
  shap.values = Matrix(X.rows(), X.cols());
  parallel_for(X.rows(), jobs, [&](std::size_t i) {
    const auto phi = exact_shapley(model, X.row(i), background, max_features);
    std::copy(phi.begin(), phi.end(), shap.values.row(i));
  });
  return shap;
}

ShapMatrix compute_sampled(const learn::TrainedModel& model, const Matrix& X,
                           const Matrix& background,
                           const std::vector<std::string>& feature_names, int n_permutations,
                           std::uint64_t seed, int jobs) {
  if (X.cols() != model.input_width())
    throw RuntimeFailure("compute_sampled: observation width does not match the model");
  ShapMatrix shap;
  shap.feature_names = feature_names;
  shap.base_value = mean_prediction(model, background);
  shap.values = Matrix(X.rows(), X.cols());
  shap.standard_errors = Matrix(X.rows(), X.cols());
  parallel_for(X.rows(), jobs, [&](std::size_t i) {
    const auto result =
        sampled_shapley(model, X.row(i), background, n_permutations, derive_seed(seed, i));
    std::copy(result.phi.begin(), result.phi.end(), shap.values.row(i));
    std::copy(result.se.begin(), result.se.end(), shap.standard_errors.row(i));
  });
  return shap;
}

namespace {

std::vector<std::size_t> importance_order(const ShapMatrix& shap) {
  const std::size_t p = shap.values.cols();
  std::vector<double> mean_abs(p, 0.0);
  for (std::size_t i = 0; i < shap.values.rows(); ++i)
    for (std::size_t j = 0; j < p; ++j) mean_abs[j] += std::abs(shap.values(i, j));
  for (double& v : mean_abs) v /= static_cast<double>(std::max<std::size_t>(1, shap.values.rows()));

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mean_abs[a] > mean_abs[b]; });
  return order;
}

double column_mean_abs(const ShapMatrix& shap, std::size_t j) {
  double acc = 0.0;
  for (std::size_t i = 0; i < shap.values.rows(); ++i) acc += std::abs(shap.values(i, j));
  return acc / static_cast<double>(std::max<std::size_t>(1, shap.values.rows()));
}

// z-scores of one raw feature column over the exported observations;
// all zeros when the column is constant.
std::vector<double> standardized_column(const Matrix& raw, std::size_t j) {
  const std::size_t n = raw.rows();
  std::vector<double> out(n, 0.0);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += raw(i, j);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (raw(i, j) - mean) * (raw(i, j) - mean);
  const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  if (sd == 0.0) return out;
  for (std::size_t i = 0; i < n; ++i) out[i] = (raw(i, j) - mean) / sd;
  return out;
}

}  // namespace

std::vector<ImportanceEntry> mean_abs_importance(const ShapMatrix& shap, int top_k) {
  if (top_k < 1) throw ConfigError("mean_abs_importance: top_k must be >= 1");
  if (shap.values.rows() == 0) throw RuntimeFailure("mean_abs_importance: empty matrix");
  const auto order = importance_order(shap);
  std::vector<ImportanceEntry> out;
  const std::size_t limit = std::min<std::size_t>(top_k, order.size());
  for (std::size_t r = 0; r < limit; ++r)
    out.push_back({shap.feature_names[order[r]], column_mean_abs(shap, order[r])});
  return out;
}

std::string export_importance(const std::vector<ImportanceEntry>& importance,
                              const std::string& model_name) {
  std::ostringstream out;
  out << "feature,mean_abs_shap,model\n";
  for (const auto& entry : importance)
    csv::write_row(out, {entry.feature, format_double(entry.mean_abs_shap), model_name});
  return out.str();
}

std::string export_beeswarm(const ShapMatrix& shap, const Matrix& raw_values, int top_k) {
  if (raw_values.rows() != shap.values.rows() || raw_values.cols() != shap.values.cols())
    throw RuntimeFailure("export_beeswarm: raw values misaligned with shap matrix");
  const auto order = importance_order(shap);
  std::ostringstream out;
  out << "feature,observation,shap_value,standardized_feature_value\n";
  const std::size_t limit = std::min<std::size_t>(top_k, order.size());
  for (std::size_t r = 0; r < limit; ++r) {
    const std::size_t j = order[r];
    const auto z = standardized_column(raw_values, j);
    for (std::size_t i = 0; i < shap.values.rows(); ++i) {
      csv::write_row(out, {shap.feature_names[j], std::to_string(i),
                           format_double(shap.values(i, j)), format_double(z[i])});
    }
  }
  return out.str();
}

std::string export_dependence(const ShapMatrix& shap, const Matrix& raw_values,
                              const std::string& feature) {
  if (raw_values.rows() != shap.values.rows() || raw_values.cols() != shap.values.cols())
    throw RuntimeFailure("export_dependence: raw values misaligned with shap matrix");
  const auto it = std::find(shap.feature_names.begin(), shap.feature_names.end(), feature);
  if (it == shap.feature_names.end())
    throw ConfigError("export_dependence: unknown feature '" + feature + "'");
  const std::size_t j = static_cast<std::size_t>(it - shap.feature_names.begin());

  std::vector<std::size_t> order(shap.values.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return raw_values(a, j) < raw_values(b, j);
  });
  const auto z = standardized_column(raw_values, j);

  std::ostringstream out;
  out << "standardized_feature_value,shap_value\n";
  for (const std::size_t i : order)
    csv::write_row(out, {format_double(z[i]), format_double(shap.values(i, j))});
  return out.str();
}

}  // namespace tradenet::shap
