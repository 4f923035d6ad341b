#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tradenet/learners.hpp"
#include "tradenet/matrix.hpp"

namespace tradenet::shap {

// Attribution matrix for a set of observations. base_value is the expected
// model output over the background set; for exact computation each row sums
// to f(x) - base_value.
struct ShapMatrix {
  Matrix values;  // observations x features
  double base_value = 0.0;
  std::vector<std::string> feature_names;
  Matrix standard_errors;  // sampled estimator only; empty for exact
};

// Exact Shapley values under the interventional value function
//   v(S) = mean over background rows b of f(x_S, b_!S).
// Coalition weights are computed in log space. Feature counts above
// max_features must go through sampled_shapley instead.
std::vector<double> exact_shapley(const learn::TrainedModel& model, const double* x,
                                  const Matrix& background, int max_features = 15);

struct SampledShap {
  std::vector<double> phi;
  std::vector<double> se;  // per-feature standard error of the estimate
};

// Monte-Carlo permutation estimator of the same quantity: walk a random
// feature ordering from a sampled background row toward x, averaging the
// marginal contributions. Unbiased; deterministic under seed.
SampledShap sampled_shapley(const learn::TrainedModel& model, const double* x,
                            const Matrix& background, int n_permutations, std::uint64_t seed);

ShapMatrix compute_exact(const learn::TrainedModel& model, const Matrix& X,
                         const Matrix& background, const std::vector<std::string>& feature_names,
                         int max_features = 15, int jobs = 1);

// Per-observation RNG streams derive from (seed, observation index).
ShapMatrix compute_sampled(const learn::TrainedModel& model, const Matrix& X,
                           const Matrix& background,
                           const std::vector<std::string>& feature_names, int n_permutations,
                           std::uint64_t seed, int jobs = 1);

struct ImportanceEntry {
  std::string feature;
  double mean_abs_shap = 0.0;
};

std::vector<ImportanceEntry> mean_abs_importance(const ShapMatrix& shap, int top_k);

// feature,mean_abs_shap,model
std::string export_importance(const std::vector<ImportanceEntry>& importance,
                              const std::string& model_name);

// Long format (feature, observation, shap_value, standardized_feature_value)
// restricted to the top_k features by mean |phi|.
std::string export_beeswarm(const ShapMatrix& shap, const Matrix& raw_values, int top_k = 20);

// (standardized_feature_value, shap_value), sorted by feature value.
std::string export_dependence(const ShapMatrix& shap, const Matrix& raw_values,
                              const std::string& feature);

}  // namespace tradenet::shap
