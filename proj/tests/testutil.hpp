#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here stays independent of the library code paths it checks: metrics are
// recomputed from dense adjacency matrices, regressions from explicit
// normal equations.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tradenet/common.hpp"
#include "tradenet/ingest.hpp"
#include "tradenet/matrix.hpp"
#include "tradenet/tradegraph.hpp"

namespace testutil {

// ---- random graphs ------------------------------------------------------

struct DenseGraph {
  int n = 0;
  std::vector<std::vector<double>> w;  // directed weights, 0 = no edge
};

inline DenseGraph random_graph(tradenet::Rng& rng, int max_nodes = 12) {
  DenseGraph g;
  g.n = 2 + static_cast<int>(rng.bounded(static_cast<std::size_t>(max_nodes - 1)));
  g.w.assign(g.n, std::vector<double>(g.n, 0.0));
  const double p = 0.15 + 0.7 * rng.uniform();
  int edges = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      if (i == j) continue;
      if (rng.uniform() < p) {
        g.w[i][j] = 0.1 + 999.9 * rng.uniform();
        ++edges;
      }
    }
  if (edges == 0) {
    g.w[0][1] = 1.0;
    if (g.n > 2) g.w[1][2] = 2.0;
  }
  // The library drops isolated countries, so keep every node incident to an
  // edge and dense indices aligned between oracle and network.
  for (int i = 0; i < g.n; ++i) {
    bool incident = false;
    for (int j = 0; j < g.n; ++j)
      if (g.w[i][j] > 0 || g.w[j][i] > 0) incident = true;
    if (!incident) g.w[i][(i + 1) % g.n] = 0.5 + rng.uniform();
  }
  return g;
}

inline tradenet::graph::TradeNetwork to_network(const DenseGraph& g, int section = 1,
                                                const std::string& period = "2020") {
  tradenet::ingest::FlowTable table;
  table.granularity = tradenet::ingest::Granularity::kAnnual;
  auto code = [](int i) {
    std::string s = "AAA";
    s[1] = static_cast<char>('A' + i / 26);
    s[2] = static_cast<char>('A' + i % 26);
    return s;
  };
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (g.w[i][j] > 0.0)
        table.entries[{code(i), code(j), section, period}] = g.w[i][j];
  return tradenet::graph::build_network(table, section, period);
}

// Node order in TradeNetwork is the code sort order, which matches the
// construction order above.

// ---- brute-force graph oracles -------------------------------------------

inline double oracle_density(const DenseGraph& g) {
  int m = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (g.w[i][j] > 0) ++m;
  return static_cast<double>(m) / (static_cast<double>(g.n) * (g.n - 1));
}

inline double oracle_reciprocity(const DenseGraph& g) {
  int m = 0, mutual = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (g.w[i][j] > 0) {
        ++m;
        if (g.w[j][i] > 0) ++mutual;
      }
  return static_cast<double>(mutual) / m;
}

inline std::vector<std::vector<bool>> undirected_binary(const DenseGraph& g) {
  std::vector<std::vector<bool>> a(g.n, std::vector<bool>(g.n, false));
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (i != j && (g.w[i][j] > 0 || g.w[j][i] > 0)) a[i][j] = true;
  return a;
}

// 3 * triangles / triples by full O(n^3) enumeration.
inline double oracle_transitivity(const DenseGraph& g) {
  const auto a = undirected_binary(g);
  long triangles = 0, triples = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        if (i == j || j == k || i == k) continue;
        if (a[i][j] && a[j][k]) {
          ++triples;  // ordered 2-path centered at j
          if (a[i][k]) ++triangles;
        }
      }
  // Each unordered triple counted twice, each triangle six times.
  if (triples == 0) return 0.0;
  return static_cast<double>(triangles) / static_cast<double>(triples);
}

// Pearson correlation over endpoint degrees, both edge orientations.
inline bool oracle_assortativity(const DenseGraph& g, double& out) {
  const auto a = undirected_binary(g);
  std::vector<int> deg(g.n, 0);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (a[i][j]) ++deg[i];
  std::vector<double> xs, ys;
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      if (a[i][j]) {
        xs.push_back(deg[i]);
        ys.push_back(deg[j]);
        xs.push_back(deg[j]);
        ys.push_back(deg[i]);
      }
  const std::size_t n = xs.size();
  if (n < 4) return false;
  double mx = 0, my = 0;
  for (std::size_t t = 0; t < n; ++t) {
    mx += xs[t];
    my += ys[t];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t t = 0; t < n; ++t) {
    sxx += (xs[t] - mx) * (xs[t] - mx);
    syy += (ys[t] - my) * (ys[t] - my);
    sxy += (xs[t] - mx) * (ys[t] - my);
  }
  if (sxx == 0 || syy == 0) return false;
  out = sxy / std::sqrt(sxx * syy);
  return true;
}

inline std::vector<double> oracle_in_strength(const DenseGraph& g) {
  std::vector<double> s(g.n, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) s[j] += g.w[i][j];
  return s;
}

inline std::vector<double> oracle_out_strength(const DenseGraph& g) {
  std::vector<double> s(g.n, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) s[i] += g.w[i][j];
  return s;
}

// Dense power iteration on the full transition matrix.
inline std::vector<double> oracle_pagerank(const DenseGraph& g, double damping = 0.85) {
  const int n = g.n;
  std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    double out = 0.0;
    for (int j = 0; j < n; ++j) out += g.w[i][j];
    if (out == 0.0) {
      for (int j = 0; j < n; ++j) p[i][j] = 1.0 / n;
    } else {
      for (int j = 0; j < n; ++j) p[i][j] = g.w[i][j] / out;
    }
  }
  std::vector<double> pr(n, 1.0 / n), next(n);
  for (int iter = 0; iter < 100000; ++iter) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += pr[i] * p[i][j];
      next[j] = (1.0 - damping) / n + damping * acc;
    }
    double change = 0.0;
    for (int j = 0; j < n; ++j) change += std::abs(next[j] - pr[j]);
    pr.swap(next);
    if (change < 1e-15) break;
  }
  return pr;
}

// Newman-Girvan Q over the weighted undirected projection, evaluated from
// the dense matrix with the (1/2m) sum_ij form.
inline double oracle_modularity_q(const DenseGraph& g, const std::vector<int>& partition) {
  const int n = g.n;
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) a[i][j] = g.w[i][j] + g.w[j][i];
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      k[i] += a[i][j];
      two_m += a[i][j];
    }
  double q = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (partition[i] == partition[j]) q += a[i][j] - k[i] * k[j] / two_m;
  return q / two_m;
}

// ---- regression oracles ---------------------------------------------------

// Normal equations (X'X)b = X'y via Gaussian elimination with partial
// pivoting, intercept column prepended.
inline std::vector<double> oracle_normal_equations(const tradenet::Matrix& x,
                                                   const std::vector<double>& y) {
  const std::size_t m = x.rows();
  const std::size_t n = x.cols() + 1;
  std::vector<std::vector<double>> xtx(n, std::vector<double>(n, 0.0));
  std::vector<double> xty(n, 0.0);
  auto cell = [&](std::size_t i, std::size_t j) { return j == 0 ? 1.0 : x(i, j - 1); };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < n; ++a) {
      xty[a] += cell(i, a) * y[i];
      for (std::size_t b = 0; b < n; ++b) xtx[a][b] += cell(i, a) * cell(i, b);
    }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(xtx[r][col]) > std::abs(xtx[pivot][col])) pivot = r;
    std::swap(xtx[col], xtx[pivot]);
    std::swap(xty[col], xty[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || xtx[r][col] == 0.0) continue;
      const double f = xtx[r][col] / xtx[col][col];
      for (std::size_t c = col; c < n; ++c) xtx[r][c] -= f * xtx[col][c];
      xty[r] -= f * xty[col];
    }
  }
  std::vector<double> beta(n);
  for (std::size_t i = 0; i < n; ++i) beta[i] = xty[i] / xtx[i][i];
  return beta;  // [intercept, slopes...]
}

inline tradenet::Matrix random_matrix(tradenet::Rng& rng, std::size_t rows, std::size_t cols) {
  tradenet::Matrix x(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) x(i, j) = rng.normal();
  return x;
}

}  // namespace testutil
