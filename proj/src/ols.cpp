#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tradenet/common.hpp"
#include "tradenet/learners.hpp"

namespace tradenet::learn {

namespace {

// Householder QR with column pivoting on the augmented [1 | X] design.
// Small trailing |R_kk| relative to |R_00| flags the pivoted-away columns
// as linearly dependent.
struct PivotedQr {
  Matrix a;                 // overwritten with R above / reflectors below
  std::vector<double> tau;  // reflector scales
  std::vector<int> pivot;   // column permutation
  int rank = 0;
};

PivotedQr qr_decompose(Matrix a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  PivotedQr qr;
  qr.tau.assign(n, 0.0);
  qr.pivot.resize(n);
  std::iota(qr.pivot.begin(), qr.pivot.end(), 0);

  std::vector<double> col_norm2(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) col_norm2[j] += a(i, j) * a(i, j);

  double r00 = 0.0;
  const std::size_t steps = std::min(m, n);
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t best = k;
    for (std::size_t j = k + 1; j < n; ++j)
      if (col_norm2[j] > col_norm2[best]) best = j;
    if (best != k) {
      for (std::size_t i = 0; i < m; ++i) std::swap(a(i, k), a(i, best));
      std::swap(col_norm2[k], col_norm2[best]);
      std::swap(qr.pivot[k], qr.pivot[best]);
    }

    double norm = 0.0;
    for (std::size_t i = k; i < m; ++i) norm += a(i, k) * a(i, k);
    norm = std::sqrt(norm);
    if (k == 0) r00 = norm;
    if (norm <= 1e-12 * std::max(1.0, r00)) break;  // remaining columns dependent

    const double alpha = a(k, k) >= 0 ? -norm : norm;
    const double v0 = a(k, k) - alpha;
    a(k, k) = alpha;
    // Store v (scaled so v[k]=1) below the diagonal.
    for (std::size_t i = k + 1; i < m; ++i) a(i, k) /= v0;
    qr.tau[k] = -v0 / alpha;

    for (std::size_t j = k + 1; j < n; ++j) {
      double dot = a(k, j);
      for (std::size_t i = k + 1; i < m; ++i) dot += a(i, k) * a(i, j);
      dot *= qr.tau[k];
      a(k, j) -= dot;
      for (std::size_t i = k + 1; i < m; ++i) a(i, j) -= dot * a(i, k);
      col_norm2[j] = std::max(0.0, col_norm2[j] - a(k, j) * a(k, j));
    }
    qr.rank = static_cast<int>(k) + 1;
  }
  qr.a = std::move(a);
  return qr;
}

}  // namespace

ModelPtr fit_ols(const Matrix& X, const std::vector<double>& y) {
  const std::size_t m = X.rows();
  const std::size_t n = X.cols() + 1;  // intercept column
  if (m != y.size()) throw RuntimeFailure("fit_ols: X/y length mismatch");
  if (m < n)
    throw RuntimeFailure("fit_ols: need at least " + std::to_string(n) + " rows, got " +
                         std::to_string(m));

  Matrix design(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    design(i, 0) = 1.0;
    for (std::size_t j = 0; j < X.cols(); ++j) design(i, j + 1) = X(i, j);
  }

  auto qr = qr_decompose(std::move(design));
  if (qr.rank < static_cast<int>(n)) {
    std::ostringstream msg;
    msg << "fit_ols: rank-deficient design; dependent columns:";
    for (std::size_t k = qr.rank; k < n; ++k) {
      const int col = qr.pivot[k];
      msg << ' ' << (col == 0 ? std::string("intercept") : "x" + std::to_string(col - 1));
    }
    throw RuntimeFailure(msg.str());
  }

  // Apply Q^T to y, then back-substitute R.
  std::vector<double> qty(y);
  for (std::size_t k = 0; k < n; ++k) {
    double dot = qty[k];
    for (std::size_t i = k + 1; i < m; ++i) dot += qr.a(i, k) * qty[i];
    dot *= qr.tau[k];
    qty[k] -= dot;
    for (std::size_t i = k + 1; i < m; ++i) qty[i] -= dot * qr.a(i, k);
  }
  std::vector<double> solution(n, 0.0);
  for (int k = static_cast<int>(n) - 1; k >= 0; --k) {
    double acc = qty[k];
    for (std::size_t j = k + 1; j < n; ++j) acc -= qr.a(k, j) * solution[j];
    solution[k] = acc / qr.a(k, k);
  }

  std::vector<double> unpermuted(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) unpermuted[qr.pivot[k]] = solution[k];

  std::vector<double> coefficients(unpermuted.begin() + 1, unpermuted.end());
  return std::make_unique<LinearModel>(Family::kOls, unpermuted[0], std::move(coefficients));
}

}  // namespace tradenet::learn
