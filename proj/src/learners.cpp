#include "tradenet/learners.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "tradenet/common.hpp"

namespace tradenet::learn {

std::string family_name(Family family) {
  switch (family) {
    case Family::kOls: return "ols";
    case Family::kEnet: return "enet";
    case Family::kSvrRbf: return "svr_rbf";
    case Family::kKnn: return "knn";
    case Family::kRForest: return "rforest";
    case Family::kGbtLevel: return "gbt_level";
    case Family::kGbtLeaf: return "gbt_leaf";
  }
  return "?";
}

std::optional<Family> family_from_name(std::string_view name) {
  for (const Family f : {Family::kOls, Family::kEnet, Family::kSvrRbf, Family::kKnn,
                         Family::kRForest, Family::kGbtLevel, Family::kGbtLeaf})
    if (family_name(f) == name) return f;
  return std::nullopt;
}

double ModelSpec::param(const std::string& name, double fallback) const {
  const auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

const std::map<Family, std::vector<std::string>>& allowed_params() {
  static const std::map<Family, std::vector<std::string>> table = {
      {Family::kOls, {}},
      {Family::kEnet, {"penalty", "mixture"}},
      {Family::kSvrRbf, {"cost", "gamma", "sigma", "epsilon"}},
      {Family::kKnn, {"neighbors", "distance_power"}},
      {Family::kRForest, {"trees", "mtry", "min_node_size", "bootstrap"}},
      {Family::kGbtLevel, {"trees", "learning_rate", "max_depth", "lambda", "alpha", "loss_huber",
                           "huber_delta"}},
      {Family::kGbtLeaf, {"trees", "learning_rate", "max_leaves", "n_bins", "lambda", "alpha",
                          "loss_huber", "huber_delta"}},
  };
  return table;
}

}  // namespace

void ModelSpec::validate() const {
  const auto& allowed = allowed_params().at(family);
  for (const auto& [name, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
      throw ConfigError("unknown hyperparameter '" + name + "' for family " +
                        family_name(family));
  }
  switch (family) {
    case Family::kOls:
      break;
    case Family::kEnet:
      require(param("penalty", 0.0) >= 0.0, "enet: penalty must be >= 0");
      require(param("mixture", 0.5) >= 0.0 && param("mixture", 0.5) <= 1.0,
              "enet: mixture must lie in [0,1]");
      break;
    case Family::kSvrRbf: {
      require(param("cost", 1.0) > 0.0, "svr_rbf: cost must be > 0");
      const bool has_gamma = params.count("gamma") > 0;
      const bool has_sigma = params.count("sigma") > 0;
      require(!(has_gamma && has_sigma), "svr_rbf: specify gamma or sigma, not both");
      if (has_gamma) require(param("gamma", 1.0) > 0.0, "svr_rbf: gamma must be > 0");
      if (has_sigma) require(param("sigma", 1.0) > 0.0, "svr_rbf: sigma must be > 0");
      require(param("epsilon", 0.1) >= 0.0, "svr_rbf: epsilon must be >= 0");
      break;
    }
    case Family::kKnn:
      require(param("neighbors", 5) >= 1, "knn: neighbors must be >= 1");
      require(param("distance_power", 2.0) > 0.0, "knn: distance_power must be > 0");
      break;
    case Family::kRForest:
      require(param("trees", 500) >= 1, "rforest: trees must be >= 1");
      require(param("mtry", 1) >= 0, "rforest: mtry must be >= 0");
      require(param("min_node_size", 5) >= 1, "rforest: min_node_size must be >= 1");
      break;
    case Family::kGbtLevel:
    case Family::kGbtLeaf: {
      require(param("trees", 200) >= 1, "gbt: trees must be >= 1");
      const double eta = param("learning_rate", 0.1);
      require(eta > 0.0 && eta <= 1.0, "gbt: learning_rate must lie in (0,1]");
      require(param("lambda", 1.0) >= 0.0, "gbt: lambda must be >= 0");
      require(param("alpha", 0.0) >= 0.0, "gbt: alpha must be >= 0");
      if (family == Family::kGbtLevel)
        require(param("max_depth", 6) >= 1, "gbt: max_depth must be >= 1");
      else {
        require(param("max_leaves", 31) >= 2, "gbt: max_leaves must be >= 2");
        require(param("n_bins", 255) >= 2, "gbt: n_bins must be >= 2");
      }
      break;
    }
  }
}

void TrainedModel::check_width(const Matrix& X) const {
  if (X.cols() != input_width())
    throw RuntimeFailure("predict: expected " + std::to_string(input_width()) +
                         " features, got " + std::to_string(X.cols()));
}

std::vector<double> LinearModel::predict(const Matrix& X) const {
  check_width(X);
  std::vector<double> out(X.rows(), intercept_);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double* row = X.row(i);
    double acc = intercept_;
    for (std::size_t j = 0; j < coefficients_.size(); ++j) acc += coefficients_[j] * row[j];
    out[i] = acc;
  }
  return out;
}

std::vector<double> SvrModel::predict(const Matrix& X) const {
  check_width(X);
  std::vector<double> out(X.rows(), bias_);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double* x = X.row(i);
    double acc = bias_;
    for (std::size_t s = 0; s < support_.rows(); ++s) {
      const double* v = support_.row(s);
      double dist2 = 0.0;
      for (std::size_t j = 0; j < support_.cols(); ++j) {
        const double d = x[j] - v[j];
        dist2 += d * d;
      }
      acc += beta_[s] * std::exp(-gamma_ * dist2);
    }
    out[i] = acc;
  }
  return out;
}

std::vector<double> KnnModel::predict(const Matrix& X) const {
  check_width(X);
  std::vector<double> out(X.rows(), 0.0);
  std::vector<std::pair<double, std::size_t>> dists(X_.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double* q = X.row(i);
    for (std::size_t r = 0; r < X_.rows(); ++r) {
      const double* t = X_.row(r);
      double acc = 0.0;
      for (std::size_t j = 0; j < X_.cols(); ++j) acc += std::pow(std::abs(q[j] - t[j]), power_);
      dists[r] = {std::pow(acc, 1.0 / power_), r};
    }
    std::partial_sort(dists.begin(), dists.begin() + k_, dists.end());
    double wsum = 0.0, acc = 0.0;
    for (int t = 0; t < k_; ++t) {
      const double w = 1.0 / (dists[t].first + 1e-12);
      wsum += w;
      acc += w * y_[dists[t].second];
    }
    out[i] = acc / wsum;
  }
  return out;
}

double Tree::predict_row(const double* x) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    node = x[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                           : nodes[node].right;
  }
  return nodes[node].value;
}

std::vector<double> ForestModel::predict(const Matrix& X) const {
  check_width(X);
  std::vector<double> out(X.rows(), 0.0);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double acc = 0.0;
    for (const auto& tree : trees_) acc += tree.predict_row(X.row(i));
    out[i] = acc / static_cast<double>(trees_.size());
  }
  return out;
}

std::vector<double> GbtModel::predict(const Matrix& X) const {
  check_width(X);
  std::vector<double> out(X.rows(), base_score_);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double acc = base_score_;
    for (const auto& tree : trees_) acc += learning_rate_ * tree.predict_row(X.row(i));
    out[i] = acc;
  }
  return out;
}

std::vector<double> GbtModel::tree_output(std::size_t tree_index, const Matrix& X) const {
  check_width(X);
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = trees_[tree_index].predict_row(X.row(i));
  return out;
}

ModelPtr fit_model(const ModelSpec& spec, const Matrix& X, const std::vector<double>& y,
                   std::uint64_t seed, int jobs) {
  spec.validate();
  switch (spec.family) {
    case Family::kOls:
      return fit_ols(X, y);
    case Family::kEnet:
      return fit_enet(X, y, spec.param("penalty", 0.0), spec.param("mixture", 0.5));
    case Family::kSvrRbf: {
      double gamma;
      if (spec.params.count("sigma")) {
        const double sigma = spec.param("sigma", 1.0);
        gamma = 1.0 / (2.0 * sigma * sigma);
      } else {
        gamma = spec.param("gamma", 1.0 / static_cast<double>(std::max<std::size_t>(1, X.cols())));
      }
      return fit_svr_rbf(X, y, spec.param("cost", 1.0), gamma, spec.param("epsilon", 0.1));
    }
    case Family::kKnn:
      return fit_knn(X, y, static_cast<int>(spec.param("neighbors", 5)),
                     spec.param("distance_power", 2.0));
    case Family::kRForest: {
      ForestOptions opts;
      opts.n_trees = static_cast<int>(spec.param("trees", 500));
      opts.mtry = static_cast<int>(spec.param("mtry", 0));
      opts.min_node_size = static_cast<int>(spec.param("min_node_size", 5));
      opts.bootstrap = spec.param("bootstrap", 1.0) != 0.0;
      opts.seed = seed;
      opts.jobs = jobs;
      return fit_rforest(X, y, opts);
    }
    case Family::kGbtLevel:
    case Family::kGbtLeaf: {
      GbtOptions opts;
      opts.variant = spec.family == Family::kGbtLevel ? GbtVariant::kLevel : GbtVariant::kLeaf;
      opts.n_trees = static_cast<int>(spec.param("trees", 200));
      opts.learning_rate = spec.param("learning_rate", 0.1);
      opts.max_depth = static_cast<int>(spec.param("max_depth", 6));
      opts.max_leaves = static_cast<int>(spec.param("max_leaves", 31));
      opts.lambda2 = spec.param("lambda", 1.0);
      opts.lambda1 = spec.param("alpha", 0.0);
      opts.n_bins = static_cast<int>(spec.param("n_bins", 255));
      opts.loss = spec.param("loss_huber", 0.0) != 0.0 ? GbtLoss::kHuber : GbtLoss::kSquared;
      opts.huber_delta = spec.param("huber_delta", 1.0);
      opts.seed = seed;
      return fit_gbt(X, y, opts);
    }
  }
  throw ConfigError("unknown model family");
}

// ---- serialization ------------------------------------------------------

namespace {

nlohmann::json trees_to_json(const std::vector<Tree>& trees) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& tree : trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.gain});
    out.push_back(std::move(nodes));
  }
  return out;
}

std::vector<Tree> trees_from_json(const nlohmann::json& j) {
  std::vector<Tree> trees;
  for (const auto& jtree : j) {
    Tree tree;
    for (const auto& jn : jtree) {
      TreeNode n;
      n.feature = jn.at(0).get<int>();
      n.threshold = jn.at(1).get<double>();
      n.left = jn.at(2).get<int>();
      n.right = jn.at(3).get<int>();
      n.value = jn.at(4).get<double>();
      n.gain = jn.at(5).get<double>();
      tree.nodes.push_back(n);
    }
    trees.push_back(std::move(tree));
  }
  return trees;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data() = j.at("data").get<std::vector<double>>();
  return m;
}

}  // namespace

std::string serialize_model(const TrainedModel& model) {
  nlohmann::json j;
  j["version"] = 1;
  j["family"] = family_name(model.family());
  j["feature_names"] = model.feature_names;
  if (const auto* linear = dynamic_cast<const LinearModel*>(&model)) {
    j["intercept"] = linear->intercept();
    j["coefficients"] = linear->coefficients();
  } else if (const auto* svr = dynamic_cast<const SvrModel*>(&model)) {
    j["support"] = matrix_to_json(svr->support_vectors());
    j["beta"] = svr->beta();
    j["bias"] = svr->bias();
    j["gamma"] = svr->gamma();
  } else if (const auto* knn = dynamic_cast<const KnnModel*>(&model)) {
    j["train_x"] = matrix_to_json(knn->train_x());
    j["train_y"] = knn->train_y();
    j["k"] = knn->k();
    j["power"] = knn->power();
  } else if (const auto* forest = dynamic_cast<const ForestModel*>(&model)) {
    j["trees"] = trees_to_json(forest->trees());
    j["width"] = forest->input_width();
  } else if (const auto* gbt = dynamic_cast<const GbtModel*>(&model)) {
    j["base_score"] = gbt->base_score();
    j["learning_rate"] = gbt->learning_rate();
    j["trees"] = trees_to_json(gbt->trees());
    j["training_loss"] = gbt->training_loss();
    j["width"] = gbt->input_width();
  } else {
    throw RuntimeFailure("serialize_model: unknown model type");
  }
  return j.dump();
}

ModelPtr deserialize_model(std::istream& in) {
  nlohmann::json j;
  in >> j;
  if (j.value("version", 0) != 1) throw ConfigError("model file: unsupported version");
  const auto family = family_from_name(j.at("family").get<std::string>());
  if (!family) throw ConfigError("model file: unknown family");

  ModelPtr model;
  switch (*family) {
    case Family::kOls:
    case Family::kEnet:
      model = std::make_unique<LinearModel>(*family, j.at("intercept").get<double>(),
                                            j.at("coefficients").get<std::vector<double>>());
      break;
    case Family::kSvrRbf:
      model = std::make_unique<SvrModel>(matrix_from_json(j.at("support")),
                                         j.at("beta").get<std::vector<double>>(),
                                         j.at("bias").get<double>(), j.at("gamma").get<double>());
      break;
    case Family::kKnn:
      model = std::make_unique<KnnModel>(matrix_from_json(j.at("train_x")),
                                         j.at("train_y").get<std::vector<double>>(),
                                         j.at("k").get<int>(), j.at("power").get<double>());
      break;
    case Family::kRForest:
      model = std::make_unique<ForestModel>(trees_from_json(j.at("trees")),
                                            j.at("width").get<std::size_t>());
      break;
    case Family::kGbtLevel:
    case Family::kGbtLeaf:
      model = std::make_unique<GbtModel>(*family, j.at("base_score").get<double>(),
                                         j.at("learning_rate").get<double>(),
                                         trees_from_json(j.at("trees")),
                                         j.at("training_loss").get<std::vector<double>>(),
                                         j.at("width").get<std::size_t>());
      break;
  }
  model->feature_names = j.at("feature_names").get<std::vector<std::string>>();
  return model;
}

}  // namespace tradenet::learn
