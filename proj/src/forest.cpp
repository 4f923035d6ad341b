#include <algorithm>
#include <cmath>
#include <numeric>

#include "tradenet/common.hpp"
#include "tradenet/learners.hpp"

namespace tradenet::learn {

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // SSE reduction
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<double>& y, int mtry, int min_node_size,
              Rng rng)
      : x_(x), y_(y), mtry_(mtry), min_node_size_(min_node_size), rng_(rng) {}

  Tree build(std::vector<std::size_t> indices) {
    tree_.nodes.clear();
    grow(std::move(indices));
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> indices) {
    const int node_id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    double sum = 0.0;
    for (const auto i : indices) sum += y_[i];
    const double mean = sum / static_cast<double>(indices.size());

    const auto choice = best_split(indices);
    if (choice.feature < 0) {
      tree_.nodes[node_id].value = mean;
      return node_id;
    }

    std::vector<std::size_t> left, right;
    for (const auto i : indices) {
      if (x_(i, choice.feature) <= choice.threshold) left.push_back(i);
      else right.push_back(i);
    }
    indices.clear();
    indices.shrink_to_fit();

    tree_.nodes[node_id].feature = choice.feature;
    tree_.nodes[node_id].threshold = choice.threshold;
    tree_.nodes[node_id].gain = choice.score;
    const int left_id = grow(std::move(left));
    const int right_id = grow(std::move(right));
    tree_.nodes[node_id].left = left_id;
    tree_.nodes[node_id].right = right_id;
    return node_id;
  }

  SplitChoice best_split(const std::vector<std::size_t>& indices) {
    SplitChoice best;
    const std::size_t n = indices.size();
    if (n < 2 || static_cast<int>(n) < min_node_size_) return best;

    // mtry features, drawn without replacement, scanned in index order so
    // ties resolve to the lowest feature then lowest threshold.
    std::vector<int> features(x_.cols());
    std::iota(features.begin(), features.end(), 0);
    const int take = std::min<int>(mtry_, static_cast<int>(features.size()));
    for (int i = 0; i < take; ++i) {
      const std::size_t j = i + rng_.bounded(features.size() - i);
      std::swap(features[i], features[j]);
    }
    features.resize(take);
    std::sort(features.begin(), features.end());

    std::vector<std::size_t> sorted(indices);
    double total_sum = 0.0, total_sq = 0.0;
    for (const auto i : indices) {
      total_sum += y_[i];
      total_sq += y_[i] * y_[i];
    }
    const double parent_sse = total_sq - total_sum * total_sum / static_cast<double>(n);

    for (const int f : features) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        if (x_(a, f) != x_(b, f)) return x_(a, f) < x_(b, f);
        return a < b;
      });
      double left_sum = 0.0, left_sq = 0.0;
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        const double yv = y_[sorted[pos]];
        left_sum += yv;
        left_sq += yv * yv;
        const double xv = x_(sorted[pos], f);
        const double xn = x_(sorted[pos + 1], f);
        if (xv == xn) continue;
        const double nl = static_cast<double>(pos + 1);
        const double nr = static_cast<double>(n - pos - 1);
        const double right_sum = total_sum - left_sum;
        const double right_sq = total_sq - left_sq;
        const double children_sse =
            (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
        const double score = parent_sse - children_sse;
        if (score > best.score) {
          best.score = score;
          best.feature = f;
          best.threshold = xv + (xn - xv) / 2.0;
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  const std::vector<double>& y_;
  int mtry_;
  int min_node_size_;
  Rng rng_;
  Tree tree_;
};

}  // namespace

ModelPtr fit_rforest(const Matrix& X, const std::vector<double>& y, const ForestOptions& opts) {
  if (opts.n_trees < 1) throw ConfigError("fit_rforest: n_trees must be >= 1");
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (n != y.size()) throw RuntimeFailure("fit_rforest: X/y length mismatch");
  if (n == 0 || p == 0) throw RuntimeFailure("fit_rforest: empty training set");
  int mtry = opts.mtry > 0 ? opts.mtry : std::max<int>(1, static_cast<int>(p) / 3);
  if (mtry > static_cast<int>(p)) throw ConfigError("fit_rforest: mtry exceeds feature count");
  if (opts.min_node_size < 1) throw ConfigError("fit_rforest: min_node_size must be >= 1");

  std::vector<Tree> trees(opts.n_trees);
  parallel_for(static_cast<std::size_t>(opts.n_trees), opts.jobs, [&](std::size_t t) {
    Rng rng(derive_seed(opts.seed, t));
    std::vector<std::size_t> indices(n);
    if (opts.bootstrap) {
      for (auto& idx : indices) idx = rng.bounded(n);
      std::sort(indices.begin(), indices.end());
    } else {
      std::iota(indices.begin(), indices.end(), 0);
    }
    TreeBuilder builder(X, y, mtry, opts.min_node_size, rng);
    trees[t] = builder.build(std::move(indices));
  });
  return std::make_unique<ForestModel>(std::move(trees), p);
}

}  // namespace tradenet::learn
