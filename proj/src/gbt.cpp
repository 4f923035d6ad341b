#include <algorithm>
#include <cmath>
#include <numeric>

#include "tradenet/common.hpp"
#include "tradenet/learners.hpp"

namespace tradenet::learn {

double gbt_loss_value(GbtLoss loss, double huber_delta, double y, double pred) {
  const double e = pred - y;
  if (loss == GbtLoss::kSquared) return 0.5 * e * e;
  const double a = std::abs(e);
  return a <= huber_delta ? 0.5 * e * e : huber_delta * (a - 0.5 * huber_delta);
}

double gbt_loss_gradient(GbtLoss loss, double huber_delta, double y, double pred) {
  const double e = pred - y;
  if (loss == GbtLoss::kSquared) return e;
  return std::clamp(e, -huber_delta, huber_delta);
}

double gbt_loss_hessian(GbtLoss loss, double, double, double) {
  if (loss == GbtLoss::kSquared) return 1.0;
  // 1-smooth pseudo-hessian keeps leaf steps descent steps outside the
  // quadratic region as well.
  return 1.0;
}

namespace {

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

// xgboost-style leaf score: T(G)^2 / (H + lambda2), halved in gains.
double leaf_score(double g, double h, double lambda1, double lambda2) {
  const double t = soft_threshold(g, lambda1);
  return t * t / (h + lambda2);
}

double leaf_weight(double g, double h, double lambda1, double lambda2) {
  return -soft_threshold(g, lambda1) / (h + lambda2);
}

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// ---- exact, depth-wise ("level") builder -------------------------------

class LevelTreeBuilder {
 public:
  LevelTreeBuilder(const Matrix& x, const std::vector<double>& g, const std::vector<double>& h,
                   const GbtOptions& opts)
      : x_(x), g_(g), h_(h), opts_(opts) {}

  Tree build() {
    std::vector<std::size_t> all(x_.rows());
    std::iota(all.begin(), all.end(), 0);
    grow(std::move(all), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> indices, int depth) {
    const int node_id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    NodeStats stats;
    for (const auto i : indices) {
      stats.g += g_[i];
      stats.h += h_[i];
    }

    SplitChoice choice;
    if (depth < opts_.max_depth && indices.size() >= 2) choice = best_split(indices, stats);
    if (choice.feature < 0) {
      tree_.nodes[node_id].value = leaf_weight(stats.g, stats.h, opts_.lambda1, opts_.lambda2);
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
    tree_.nodes[node_id].gain = choice.gain;
    const int left_id = grow(std::move(left), depth + 1);
    const int right_id = grow(std::move(right), depth + 1);
    tree_.nodes[node_id].left = left_id;
    tree_.nodes[node_id].right = right_id;
    return node_id;
  }

  SplitChoice best_split(const std::vector<std::size_t>& indices, const NodeStats& stats) {
    SplitChoice best;
    const double parent = leaf_score(stats.g, stats.h, opts_.lambda1, opts_.lambda2);
    std::vector<std::size_t> sorted(indices);
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        if (x_(a, f) != x_(b, f)) return x_(a, f) < x_(b, f);
        return a < b;
      });
      double gl = 0.0, hl = 0.0;
      for (std::size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
        gl += g_[sorted[pos]];
        hl += h_[sorted[pos]];
        const double xv = x_(sorted[pos], f);
        const double xn = x_(sorted[pos + 1], f);
        if (xv == xn) continue;
        const double gain =
            0.5 * (leaf_score(gl, hl, opts_.lambda1, opts_.lambda2) +
                   leaf_score(stats.g - gl, stats.h - hl, opts_.lambda1, opts_.lambda2) - parent);
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = static_cast<int>(f);
          best.threshold = xv + (xn - xv) / 2.0;
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const GbtOptions& opts_;
  Tree tree_;
};

// ---- histogram, best-leaf-first ("leaf") builder ------------------------

struct FeatureBins {
  std::vector<double> cuts;  // sorted thresholds; bin(x) = first cut >= x
  int bin_count() const { return static_cast<int>(cuts.size()) + 1; }
};

class LeafTreeBuilder {
 public:
  LeafTreeBuilder(const Matrix& x, const std::vector<FeatureBins>& bins,
                  const std::vector<std::vector<std::uint16_t>>& bin_index,
                  const std::vector<double>& g, const std::vector<double>& h,
                  const GbtOptions& opts)
      : x_(x), bins_(bins), bin_index_(bin_index), g_(g), h_(h), opts_(opts) {}

  Tree build() {
    struct OpenLeaf {
      int node_id;
      std::vector<std::size_t> indices;
      NodeStats stats;
      SplitChoice choice;
    };

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<OpenLeaf> open;
    {
      OpenLeaf root;
      root.node_id = 0;
      root.indices.resize(x_.rows());
      std::iota(root.indices.begin(), root.indices.end(), 0);
      for (const auto i : root.indices) {
        root.stats.g += g_[i];
        root.stats.h += h_[i];
      }
      root.choice = best_split(root.indices, root.stats);
      open.push_back(std::move(root));
    }

    int leaves = 1;
    while (leaves < opts_.max_leaves) {
      // Best expandable leaf; ties to the lower node id.
      int best = -1;
      for (std::size_t i = 0; i < open.size(); ++i) {
        if (open[i].choice.feature < 0) continue;
        if (best < 0 || open[i].choice.gain > open[best].choice.gain ||
            (open[i].choice.gain == open[best].choice.gain &&
             open[i].node_id < open[best].node_id))
          best = static_cast<int>(i);
      }
      if (best < 0) break;

      OpenLeaf leaf = std::move(open[best]);
      open.erase(open.begin() + best);

      OpenLeaf left, right;
      left.node_id = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      right.node_id = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      for (const auto i : leaf.indices) {
        if (x_(i, leaf.choice.feature) <= leaf.choice.threshold) left.indices.push_back(i);
        else right.indices.push_back(i);
      }
      for (const auto i : left.indices) {
        left.stats.g += g_[i];
        left.stats.h += h_[i];
      }
      right.stats.g = leaf.stats.g - left.stats.g;
      right.stats.h = leaf.stats.h - left.stats.h;

      auto& parent = tree.nodes[leaf.node_id];
      parent.feature = leaf.choice.feature;
      parent.threshold = leaf.choice.threshold;
      parent.gain = leaf.choice.gain;
      parent.left = left.node_id;
      parent.right = right.node_id;

      left.choice = best_split(left.indices, left.stats);
      right.choice = best_split(right.indices, right.stats);
      open.push_back(std::move(left));
      open.push_back(std::move(right));
      ++leaves;
    }

    for (const auto& leaf : open)
      tree.nodes[leaf.node_id].value =
          leaf_weight(leaf.stats.g, leaf.stats.h, opts_.lambda1, opts_.lambda2);
    return tree;
  }

 private:
  SplitChoice best_split(const std::vector<std::size_t>& indices, const NodeStats& stats) {
    SplitChoice best;
    if (indices.size() < 2) return best;
    const double parent = leaf_score(stats.g, stats.h, opts_.lambda1, opts_.lambda2);
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      const auto& bins = bins_[f];
      if (bins.cuts.empty()) continue;
      const int nbins = bins.bin_count();
      hist_g_.assign(nbins, 0.0);
      hist_h_.assign(nbins, 0.0);
      hist_n_.assign(nbins, 0);
      for (const auto i : indices) {
        const int b = bin_index_[f][i];
        hist_g_[b] += g_[i];
        hist_h_[b] += h_[i];
        ++hist_n_[b];
      }
      double gl = 0.0, hl = 0.0;
      std::size_t nl = 0;
      for (int b = 0; b + 1 < nbins; ++b) {
        gl += hist_g_[b];
        hl += hist_h_[b];
        nl += hist_n_[b];
        if (nl == 0 || nl == indices.size()) continue;
        const double gain =
            0.5 * (leaf_score(gl, hl, opts_.lambda1, opts_.lambda2) +
                   leaf_score(stats.g - gl, stats.h - hl, opts_.lambda1, opts_.lambda2) - parent);
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = static_cast<int>(f);
          best.threshold = bins.cuts[b];
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  const std::vector<FeatureBins>& bins_;
  const std::vector<std::vector<std::uint16_t>>& bin_index_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const GbtOptions& opts_;
  std::vector<double> hist_g_, hist_h_;
  std::vector<std::size_t> hist_n_;
};

std::vector<FeatureBins> make_bins(const Matrix& x, int n_bins) {
  std::vector<FeatureBins> bins(x.cols());
  std::vector<double> values(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < x.rows(); ++i) values[i] = x(i, f);
    std::sort(values.begin(), values.end());
    std::vector<double> unique(values);
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

    auto& cuts = bins[f].cuts;
    if (static_cast<int>(unique.size()) <= n_bins) {
      // Lossless binning: one bin per distinct value, cuts at midpoints, so
      // histogram splits coincide with exact split search.
      for (std::size_t u = 0; u + 1 < unique.size(); ++u)
        cuts.push_back(unique[u] + (unique[u + 1] - unique[u]) / 2.0);
    } else {
      for (int b = 1; b < n_bins; ++b) {
        const std::size_t pos = b * values.size() / n_bins;
        if (pos == 0 || pos >= values.size()) continue;
        if (values[pos - 1] == values[pos]) continue;
        cuts.push_back(values[pos - 1] + (values[pos] - values[pos - 1]) / 2.0);
      }
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    }
  }
  return bins;
}

}  // namespace

ModelPtr fit_gbt(const Matrix& X, const std::vector<double>& y, const GbtOptions& opts) {
  if (opts.n_trees < 1) throw ConfigError("fit_gbt: n_trees must be >= 1");
  if (opts.learning_rate <= 0.0 || opts.learning_rate > 1.0)
    throw ConfigError("fit_gbt: learning_rate must lie in (0,1]");
  if (opts.variant == GbtVariant::kLevel && opts.max_depth < 1)
    throw ConfigError("fit_gbt: max_depth must be >= 1");
  if (opts.variant == GbtVariant::kLeaf && (opts.max_leaves < 2 || opts.n_bins < 2))
    throw ConfigError("fit_gbt: max_leaves and n_bins must be >= 2");
  if (opts.variant == GbtVariant::kLeaf && opts.n_bins > 65535)
    throw ConfigError("fit_gbt: n_bins must fit 16-bit bin indices");
  if (opts.lambda1 < 0.0 || opts.lambda2 < 0.0)
    throw ConfigError("fit_gbt: regularization must be >= 0");
  const std::size_t n = X.rows();
  if (n != y.size()) throw RuntimeFailure("fit_gbt: X/y length mismatch");
  if (n == 0) throw RuntimeFailure("fit_gbt: empty training set");

  double base = 0.0;
  for (const double v : y) base += v;
  base /= static_cast<double>(n);

  std::vector<FeatureBins> bins;
  std::vector<std::vector<std::uint16_t>> bin_index;
  if (opts.variant == GbtVariant::kLeaf) {
    bins = make_bins(X, opts.n_bins);
    bin_index.resize(X.cols());
    for (std::size_t f = 0; f < X.cols(); ++f) {
      bin_index[f].resize(n);
      const auto& cuts = bins[f].cuts;
      for (std::size_t i = 0; i < n; ++i) {
        bin_index[f][i] = static_cast<std::uint16_t>(
            std::lower_bound(cuts.begin(), cuts.end(), X(i, f)) - cuts.begin());
      }
    }
  }

  std::vector<double> pred(n, base), g(n), h(n);
  std::vector<Tree> trees;
  std::vector<double> loss_curve;
  trees.reserve(opts.n_trees);

  for (int t = 0; t < opts.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = gbt_loss_gradient(opts.loss, opts.huber_delta, y[i], pred[i]);
      h[i] = gbt_loss_hessian(opts.loss, opts.huber_delta, y[i], pred[i]);
    }
    Tree tree;
    if (opts.variant == GbtVariant::kLevel) {
      tree = LevelTreeBuilder(X, g, h, opts).build();
    } else {
      tree = LeafTreeBuilder(X, bins, bin_index, g, h, opts).build();
    }
    for (std::size_t i = 0; i < n; ++i)
      pred[i] += opts.learning_rate * tree.predict_row(X.row(i));
    trees.push_back(std::move(tree));

    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      loss += gbt_loss_value(opts.loss, opts.huber_delta, y[i], pred[i]);
    loss_curve.push_back(loss / static_cast<double>(n));
  }

  const Family family =
      opts.variant == GbtVariant::kLevel ? Family::kGbtLevel : Family::kGbtLeaf;
  return std::make_unique<GbtModel>(family, base, opts.learning_rate, std::move(trees),
                                    std::move(loss_curve), X.cols());
}

}  // namespace tradenet::learn
