#include "tradenet/common.hpp"
#include "tradenet/learners.hpp"

namespace tradenet::learn {

ModelPtr fit_knn(const Matrix& X, const std::vector<double>& y, int k, double distance_power) {
  if (k < 1) throw ConfigError("fit_knn: k must be >= 1");
  if (static_cast<std::size_t>(k) > X.rows())
    throw ConfigError("fit_knn: k exceeds training rows (" + std::to_string(k) + " > " +
                      std::to_string(X.rows()) + ")");
  if (distance_power <= 0.0) throw ConfigError("fit_knn: distance_power must be > 0");
  if (X.rows() != y.size()) throw RuntimeFailure("fit_knn: X/y length mismatch");
  return std::make_unique<KnnModel>(X, y, k, distance_power);
}

}  // namespace tradenet::learn
