#include <cmath>

#include "tradenet/common.hpp"
#include "tradenet/learners.hpp"

namespace tradenet::learn {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

// Coordinate descent on internally centered data. Centering eliminates the
// intercept from the sweeps (its optimum is 0 there) and with it the
// near-collinearity of constant-shifted columns such as the unscaled
// "year"; coefficients are unchanged by the reparameterization and the
// intercept is recovered as mean(y) - mean(x)'beta.
ModelPtr fit_enet(const Matrix& X, const std::vector<double>& y, double penalty, double mixture,
                  double tol, int max_sweeps) {
  if (penalty < 0.0) throw ConfigError("fit_enet: penalty must be >= 0");
  if (mixture < 0.0 || mixture > 1.0) throw ConfigError("fit_enet: mixture must lie in [0,1]");
  const std::size_t m = X.rows();
  const std::size_t p = X.cols();
  if (m != y.size()) throw RuntimeFailure("fit_enet: X/y length mismatch");
  if (m == 0) throw RuntimeFailure("fit_enet: empty training set");

  const double l1 = mixture * penalty;
  const double l2 = (1.0 - mixture) * penalty;
  const double md = static_cast<double>(m);

  std::vector<double> mean_x(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < m; ++i) mean_x[j] += X(i, j);
    mean_x[j] /= md;
  }
  double mean_y = 0.0;
  for (const double v : y) mean_y += v;
  mean_y /= md;

  Matrix centered(m, p);
  std::vector<double> col_sq(p, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      const double v = X(i, j) - mean_x[j];
      centered(i, j) = v;
      col_sq[j] += v * v;
    }

  std::vector<double> beta(p, 0.0);
  std::vector<double> residual(m);  // centered y - centered X * beta
  for (std::size_t i = 0; i < m; ++i) residual[i] = y[i] - mean_y;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      // rho = (1/m) sum x_ij (residual_i + x_ij beta_j)
      double rho = 0.0;
      for (std::size_t i = 0; i < m; ++i) rho += centered(i, j) * residual[i];
      rho = rho / md + col_sq[j] / md * beta[j];
      const double denom = col_sq[j] / md + 2.0 * l2;
      const double updated = denom > 0.0 ? soft_threshold(rho, l1) / denom : 0.0;
      const double delta = updated - beta[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < m; ++i) residual[i] -= delta * centered(i, j);
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < tol) {
      double intercept = mean_y;
      for (std::size_t j = 0; j < p; ++j) intercept -= mean_x[j] * beta[j];
      return std::make_unique<LinearModel>(Family::kEnet, intercept, std::move(beta));
    }
  }
  throw RuntimeFailure("fit_enet: no convergence in " + std::to_string(max_sweeps) + " sweeps");
}

}  // namespace tradenet::learn
