#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tradenet/matrix.hpp"

namespace tradenet::learn {

enum class Family { kOls, kEnet, kSvrRbf, kKnn, kRForest, kGbtLevel, kGbtLeaf };

std::string family_name(Family family);
std::optional<Family> family_from_name(std::string_view name);

// A model family plus its hyperparameters. Names and ranges are validated
// against the family before fitting.
struct ModelSpec {
  Family family = Family::kOls;
  std::map<std::string, double> params;

  double param(const std::string& name, double fallback) const;
  void validate() const;
};

class TrainedModel {
 public:
  virtual ~TrainedModel() = default;
  virtual Family family() const = 0;
  virtual std::vector<double> predict(const Matrix& X) const = 0;
  virtual std::size_t input_width() const = 0;

  std::vector<std::string> feature_names;

 protected:
  void check_width(const Matrix& X) const;
};

using ModelPtr = std::unique_ptr<TrainedModel>;

// ---- linear family ----------------------------------------------------

class LinearModel : public TrainedModel {
 public:
  LinearModel(Family family, double intercept, std::vector<double> coefficients)
      : family_(family), intercept_(intercept), coefficients_(std::move(coefficients)) {}

  Family family() const override { return family_; }
  std::vector<double> predict(const Matrix& X) const override;
  std::size_t input_width() const override { return coefficients_.size(); }

  double intercept() const { return intercept_; }
  const std::vector<double>& coefficients() const { return coefficients_; }

 private:
  Family family_;
  double intercept_;
  std::vector<double> coefficients_;
};

// Least squares via Householder QR with column pivoting; throws on a
// rank-deficient design, naming the dependent columns.
ModelPtr fit_ols(const Matrix& X, const std::vector<double>& y);

// Coordinate descent on
//   (1/2m) sum (y - xb)^2 + l1 * sum|b| + l2 * sum b^2
// with l1 = mixture*penalty, l2 = (1-mixture)*penalty; intercept unpenalized.
ModelPtr fit_enet(const Matrix& X, const std::vector<double>& y, double penalty, double mixture,
                  double tol = 1e-9, int max_sweeps = 100000);

// ---- SVR --------------------------------------------------------------

class SvrModel : public TrainedModel {
 public:
  SvrModel(Matrix support, std::vector<double> beta, double bias, double gamma)
      : support_(std::move(support)), beta_(std::move(beta)), bias_(bias), gamma_(gamma) {}

  Family family() const override { return Family::kSvrRbf; }
  std::vector<double> predict(const Matrix& X) const override;
  std::size_t input_width() const override { return support_.cols(); }

  const Matrix& support_vectors() const { return support_; }
  const std::vector<double>& beta() const { return beta_; }
  double bias() const { return bias_; }
  double gamma() const { return gamma_; }

 private:
  Matrix support_;            // support vectors, one per row
  std::vector<double> beta_;  // alpha - alpha*, one per support vector
  double bias_;
  double gamma_;
};

// Epsilon-insensitive SVR, RBF kernel k(x,x') = exp(-gamma |x-x'|^2),
// solved by SMO over maximal-violating pairs. Terminates when the largest
// KKT violation drops below kkt_tol; throws with the violation if the
// iteration budget runs out.
ModelPtr fit_svr_rbf(const Matrix& X, const std::vector<double>& y, double cost, double gamma,
                     double epsilon = 0.1, double kkt_tol = 1e-3);

// ---- k-NN -------------------------------------------------------------

class KnnModel : public TrainedModel {
 public:
  KnnModel(Matrix X, std::vector<double> y, int k, double power)
      : X_(std::move(X)), y_(std::move(y)), k_(k), power_(power) {}

  Family family() const override { return Family::kKnn; }
  std::vector<double> predict(const Matrix& X) const override;
  std::size_t input_width() const override { return X_.cols(); }

  const Matrix& train_x() const { return X_; }
  const std::vector<double>& train_y() const { return y_; }
  int k() const { return k_; }
  double power() const { return power_; }

 private:
  Matrix X_;
  std::vector<double> y_;
  int k_;
  double power_;  // Minkowski distance power
};

// Inverse-distance weighted k-NN: w_i = 1/(d_i + 1e-12) over the k nearest
// by Minkowski-p distance.
ModelPtr fit_knn(const Matrix& X, const std::vector<double>& y, int k, double distance_power);

// ---- trees ------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;  // leaf output
  double gain = 0.0;   // split gain (boosting trees)
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict_row(const double* x) const;
};

class ForestModel : public TrainedModel {
 public:
  explicit ForestModel(std::vector<Tree> trees, std::size_t width)
      : trees_(std::move(trees)), width_(width) {}

  Family family() const override { return Family::kRForest; }
  std::vector<double> predict(const Matrix& X) const override;
  std::size_t input_width() const override { return width_; }

  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::vector<Tree> trees_;
  std::size_t width_;
};

struct ForestOptions {
  int n_trees = 500;
  int mtry = 0;  // 0 = max(1, features/3)
  int min_node_size = 5;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Variance-reduction CART forest on bootstrap samples with mtry features
// per split. Per-tree RNG streams derive from the seed, so results are
// identical for any job count.
ModelPtr fit_rforest(const Matrix& X, const std::vector<double>& y, const ForestOptions& opts);

// ---- gradient boosting ------------------------------------------------

enum class GbtVariant { kLevel, kLeaf };
enum class GbtLoss { kSquared, kHuber };

// Loss derivatives as consumed by the booster; exposed for testing.
double gbt_loss_value(GbtLoss loss, double huber_delta, double y, double pred);
double gbt_loss_gradient(GbtLoss loss, double huber_delta, double y, double pred);
double gbt_loss_hessian(GbtLoss loss, double huber_delta, double y, double pred);

struct GbtOptions {
  GbtVariant variant = GbtVariant::kLevel;
  int n_trees = 200;
  double learning_rate = 0.1;
  int max_depth = 6;     // level variant
  int max_leaves = 31;   // leaf variant
  double lambda2 = 1.0;  // L2 on leaf weights
  double lambda1 = 0.0;  // L1 on leaf weights
  int n_bins = 255;      // leaf variant histograms
  GbtLoss loss = GbtLoss::kSquared;
  double huber_delta = 1.0;
  std::uint64_t seed = 0;
};

class GbtModel : public TrainedModel {
 public:
  GbtModel(Family family, double base_score, double learning_rate, std::vector<Tree> trees,
           std::vector<double> training_loss, std::size_t width)
      : family_(family),
        base_score_(base_score),
        learning_rate_(learning_rate),
        trees_(std::move(trees)),
        training_loss_(std::move(training_loss)),
        width_(width) {}

  Family family() const override { return family_; }
  std::vector<double> predict(const Matrix& X) const override;
  std::size_t input_width() const override { return width_; }

  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<Tree>& trees() const { return trees_; }
  // Mean training loss after each boosting iteration.
  const std::vector<double>& training_loss() const { return training_loss_; }
  // Raw (unscaled) output of one tree per row.
  std::vector<double> tree_output(std::size_t tree_index, const Matrix& X) const;

 private:
  Family family_;
  double base_score_;
  double learning_rate_;
  std::vector<Tree> trees_;
  std::vector<double> training_loss_;
  std::size_t width_;
};

// Second-order boosting from a mean base score. Leaf weight is
// -soft_threshold(G, lambda1) / (H + lambda2); the level variant grows
// depth-wise with exact split search, the leaf variant best-leaf-first over
// histogram splits.
ModelPtr fit_gbt(const Matrix& X, const std::vector<double>& y, const GbtOptions& opts);

// ---- shared -----------------------------------------------------------

// Fits a ModelSpec after validation; seed feeds the resampling learners.
ModelPtr fit_model(const ModelSpec& spec, const Matrix& X, const std::vector<double>& y,
                   std::uint64_t seed, int jobs = 1);

// Versioned text format sufficient for exact predict reproduction.
std::string serialize_model(const TrainedModel& model);
ModelPtr deserialize_model(std::istream& in);

}  // namespace tradenet::learn
