#include <algorithm>
#include <cmath>
#include <limits>

#include "tradenet/common.hpp"
#include "tradenet/learners.hpp"

namespace tradenet::learn {

// Epsilon-insensitive SVR in the beta = alpha - alpha* formulation:
//   maximize  W(b) = -1/2 b'Kb + y'b - eps*|b|_1
//   subject to sum(b) = 0,  -C <= b_i <= C.
// SMO over the maximal violating pair; each pair subproblem is a concave
// piecewise quadratic in one variable, maximized exactly over its segments.
namespace {

struct Interval {
  double lower;  // b >= lower
  double upper;  // b <= upper
};

// Admissible multiplier range for b given beta_i and smooth gradient
// G_i = y_i - (K beta)_i.
Interval kkt_interval(double beta, double g, double c, double eps) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (beta >= c) return {-inf, g - eps};
  if (beta <= -c) return {g + eps, inf};
  if (beta > 0.0) return {g - eps, g - eps};
  if (beta < 0.0) return {g + eps, g + eps};
  return {g - eps, g + eps};
}

}  // namespace

ModelPtr fit_svr_rbf(const Matrix& X, const std::vector<double>& y, double cost, double gamma,
                     double epsilon, double kkt_tol) {
  if (cost <= 0.0) throw ConfigError("fit_svr_rbf: cost must be > 0");
  if (gamma <= 0.0) throw ConfigError("fit_svr_rbf: gamma must be > 0");
  if (epsilon < 0.0) throw ConfigError("fit_svr_rbf: epsilon must be >= 0");
  const std::size_t n = X.rows();
  if (n != y.size()) throw RuntimeFailure("fit_svr_rbf: X/y length mismatch");
  if (n == 0) throw RuntimeFailure("fit_svr_rbf: empty training set");

  // Dense kernel matrix; training sets here are fold-sized.
  Matrix kernel(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    kernel(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double dist2 = 0.0;
      for (std::size_t f = 0; f < X.cols(); ++f) {
        const double d = X(i, f) - X(j, f);
        dist2 += d * d;
      }
      const double k = std::exp(-gamma * dist2);
      kernel(i, j) = k;
      kernel(j, i) = k;
    }
  }

  std::vector<double> beta(n, 0.0);
  std::vector<double> grad(y);  // G = y - K beta
  const double c = cost;

  const long max_iter = std::max<long>(200000, static_cast<long>(n) * 2000);
  double violation = 0.0;
  long iter = 0;
  for (; iter < max_iter; ++iter) {
    // Maximal violating pair.
    double max_lower = -std::numeric_limits<double>::infinity();
    double min_upper = std::numeric_limits<double>::infinity();
    std::size_t i_low = 0, i_up = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto iv = kkt_interval(beta[i], grad[i], c, epsilon);
      if (iv.lower > max_lower) {
        max_lower = iv.lower;
        i_low = i;
      }
      if (iv.upper < min_upper) {
        min_upper = iv.upper;
        i_up = i;
      }
    }
    violation = max_lower - min_upper;
    if (violation < kkt_tol) break;

    const std::size_t i = i_low, j = i_up;
    const double s = beta[i] + beta[j];
    const double lo = std::max(-c, s - c);
    const double hi = std::min(c, s + c);

    // Pair objective in t = beta_i (beta_j = s - t), up to a constant:
    //   -1/2 eta t^2 + c1 t - eps(|t| + |s-t|)  with
    //   eta = Kii + Kjj - 2Kij, c1 from the frozen remainder.
    const double kii = kernel(i, i), kjj = kernel(j, j), kij = kernel(i, j);
    const double eta = kii + kjj - 2.0 * kij;
    const double gi_tilde = grad[i] + kii * beta[i] + kij * beta[j];
    const double gj_tilde = grad[j] + kij * beta[i] + kjj * beta[j];
    const double c1 = gi_tilde - gj_tilde + s * (kjj - kij);

    auto objective = [&](double t) {
      return -0.5 * eta * t * t + c1 * t - epsilon * (std::abs(t) + std::abs(s - t));
    };

    // Candidate points: segment-wise unconstrained optima and breakpoints.
    double best_t = lo;
    double best_w = objective(lo);
    auto consider = [&](double t) {
      if (t < lo || t > hi) return;
      const double w = objective(t);
      if (w > best_w || (w == best_w && t < best_t)) {
        best_w = w;
        best_t = t;
      }
    };
    consider(hi);
    consider(0.0);
    consider(s);
    if (eta > 0.0) {
      for (const double sign_t : {-1.0, 1.0}) {
        for (const double sign_st : {-1.0, 1.0}) {
          // d/dt: -eta t + c1 - eps*sign(t) + eps*sign(s-t) = 0
          const double t = (c1 - epsilon * sign_t + epsilon * sign_st) / eta;
          if ((sign_t > 0 ? t >= 0 : t <= 0) && (sign_st > 0 ? s - t >= 0 : s - t <= 0))
            consider(t);
        }
      }
    }

    const double new_i = best_t;
    const double new_j = s - best_t;
    const double di = new_i - beta[i];
    const double dj = new_j - beta[j];
    if (di == 0.0 && dj == 0.0) {
      // Numerically stuck pair; KKT violation cannot be reduced further.
      break;
    }
    beta[i] = new_i;
    beta[j] = new_j;
    for (std::size_t k = 0; k < n; ++k) grad[k] -= kernel(k, i) * di + kernel(k, j) * dj;
  }

  if (violation >= kkt_tol)
    throw RuntimeFailure("fit_svr_rbf: no convergence, max KKT violation " +
                         format_double(violation));

  // Bias from the final multiplier interval.
  double max_lower = -std::numeric_limits<double>::infinity();
  double min_upper = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const auto iv = kkt_interval(beta[i], grad[i], c, epsilon);
    max_lower = std::max(max_lower, iv.lower);
    min_upper = std::min(min_upper, iv.upper);
  }
  double bias;
  if (std::isinf(max_lower) && std::isinf(min_upper)) bias = 0.0;
  else if (std::isinf(max_lower)) bias = min_upper;
  else if (std::isinf(min_upper)) bias = max_lower;
  else bias = 0.5 * (max_lower + min_upper);

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i)
    if (beta[i] != 0.0) active.push_back(i);
  Matrix support(active.size(), X.cols());
  std::vector<double> support_beta(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    support_beta[a] = beta[active[a]];
    for (std::size_t f = 0; f < X.cols(); ++f) support(a, f) = X(active[a], f);
  }
  return std::make_unique<SvrModel>(std::move(support), std::move(support_beta), bias, gamma);
}

}  // namespace tradenet::learn
