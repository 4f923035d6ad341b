#include "tradenet/netmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>

#include "tradenet/common.hpp"

namespace tradenet::metrics {

double strength(const graph::TradeNetwork& net, const std::string& node,
                StrengthDirection direction) {
  const int idx = net.node_index(node);
  if (idx < 0) throw RuntimeFailure("unknown node: " + node);
  const auto& edges =
      direction == StrengthDirection::kIn ? net.in_edges()[idx] : net.out_edges()[idx];
  double total = 0.0;
  for (const auto& [other, w] : edges) total += w;
  return total;
}

std::vector<double> pagerank_scores(const graph::TradeNetwork& net, PagerankOptions opts) {
  const std::size_t n = net.node_count();
  if (n == 0) throw RuntimeFailure("pagerank: empty network");

  std::vector<double> out_weight(n, 0.0);
  for (std::size_t u = 0; u < n; ++u)
    for (const auto& [v, w] : net.out_edges()[u]) out_weight[u] += w;

  std::vector<double> pr(n, 1.0 / static_cast<double>(n)), next(n, 0.0);
  const double d = opts.damping;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    double dangling_mass = 0.0;
    for (std::size_t u = 0; u < n; ++u)
      if (out_weight[u] == 0.0) dangling_mass += pr[u];

    const double base = (1.0 - d) / static_cast<double>(n) +
                        d * dangling_mass / static_cast<double>(n);
    std::fill(next.begin(), next.end(), base);
    for (std::size_t u = 0; u < n; ++u) {
      if (out_weight[u] == 0.0) continue;
      const double share = d * pr[u] / out_weight[u];
      for (const auto& [v, w] : net.out_edges()[u]) next[v] += share * w;
    }

    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - pr[i]);
    pr.swap(next);
    if (change < opts.tol) return pr;
  }

  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) residual += std::abs(pr[i] - next[i]);
  throw RuntimeFailure("pagerank failed to converge in " + std::to_string(opts.max_iter) +
                       " iterations, residual " + format_double(residual));
}

std::map<std::string, double> pagerank(const graph::TradeNetwork& net, PagerankOptions opts) {
  const auto scores = pagerank_scores(net, opts);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[net.nodes()[i]] = scores[i];
  return out;
}

double density(const graph::TradeNetwork& net) {
  const double n = static_cast<double>(net.node_count());
  if (net.node_count() < 2) throw RuntimeFailure("density needs at least 2 nodes");
  return static_cast<double>(net.edge_count()) / (n * (n - 1.0));
}

double reciprocity(const graph::TradeNetwork& net) {
  if (net.edge_count() == 0) throw RuntimeFailure("reciprocity needs at least 1 edge");
  std::size_t mutual = 0;
  for (const auto& [key, w] : net.edges())
    if (net.weight(key.second, key.first) > 0.0) ++mutual;
  return static_cast<double>(mutual) / static_cast<double>(net.edge_count());
}

double transitivity(const graph::TradeNetwork& net) {
  if (net.node_count() < 3) throw RuntimeFailure("transitivity needs at least 3 nodes");
  const auto view = graph::undirected_view(net);
  const auto adj = view.binary_adjacency();

  // Each triangle is seen once per incident edge, so the edge-wise
  // intersection count equals 3 * triangles.
  std::uint64_t closed = 0;
  for (const auto& [key, w] : view.edges) {
    const auto& a = adj[key.first];
    const auto& b = adj[key.second];
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) ++i;
      else if (a[i] > b[j]) ++j;
      else ++closed, ++i, ++j;
    }
  }
  std::uint64_t triples = 0;
  for (const auto& nbrs : adj) {
    const std::uint64_t deg = nbrs.size();
    triples += deg * (deg - 1) / 2;
  }
  if (triples == 0) return 0.0;
  return static_cast<double>(closed) / static_cast<double>(triples);
}

double assortativity(const graph::TradeNetwork& net) {
  const auto view = graph::undirected_view(net);
  if (view.edges.size() < 2) throw RuntimeFailure("assortativity needs at least 2 edges");
  const auto adj = view.binary_adjacency();
  std::vector<std::int64_t> degree(adj.size());
  for (std::size_t i = 0; i < adj.size(); ++i) degree[i] = static_cast<std::int64_t>(adj[i].size());

  // Pearson correlation over endpoint degree pairs, both orientations per
  // edge. Integer sums keep the zero-variance check exact.
  std::int64_t n = 0, sx = 0, sxx = 0, sxy = 0;
  for (const auto& [key, w] : view.edges) {
    const std::int64_t du = degree[key.first];
    const std::int64_t dv = degree[key.second];
    n += 2;
    sx += du + dv;
    sxx += du * du + dv * dv;
    sxy += 2 * du * dv;
  }
  const std::int64_t var_num = n * sxx - sx * sx;
  if (var_num == 0) throw RuntimeFailure("undefined assortativity: zero degree variance");
  const double cov_num = static_cast<double>(n * sxy - sx * sx);
  return cov_num / static_cast<double>(var_num);
}

double modularity_q(const graph::UndirectedView& view, const std::vector<int>& partition) {
  if (partition.size() != view.node_count)
    throw RuntimeFailure("modularity_q: partition does not cover all nodes");
  int communities = 0;
  for (int c : partition) communities = std::max(communities, c + 1);

  double w_edges = 0.0;
  std::vector<double> internal(communities, 0.0);
  for (const auto& [key, w] : view.edges) {
    w_edges += w;
    if (partition[key.first] == partition[key.second]) internal[partition[key.first]] += w;
  }
  if (w_edges <= 0.0) throw RuntimeFailure("modularity_q: empty view");

  // Degree total accumulated node-wise so the one-community partition gives
  // D_c / (2W) == 1 bit-for-bit.
  const auto k = view.weighted_degrees();
  double degree_total = 0.0;
  std::vector<double> community_degree(communities, 0.0);
  for (std::size_t i = 0; i < k.size(); ++i) {
    degree_total += k[i];
    community_degree[partition[i]] += k[i];
  }

  double q = 0.0;
  if (communities == 1) {
    q = internal[0] / w_edges - (community_degree[0] / degree_total) *
                                    (community_degree[0] / degree_total);
    return q;
  }
  for (int c = 0; c < communities; ++c) {
    const double a = community_degree[c] / degree_total;
    q += internal[c] / w_edges - a * a;
  }
  return q;
}

namespace {

// Deterministic bounded draw (portable across standard libraries).
std::size_t bounded(std::uint64_t& state, std::size_t n) {
  state ^= state << 13;
  state ^= state >> 7;
  state ^= state << 17;
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(state) * static_cast<unsigned __int128>(n)) >> 64);
}

struct LouvainGraph {
  std::vector<std::vector<std::pair<int, double>>> adj;  // no self entries
  std::vector<double> self;    // self-loop weight, counted once
  std::vector<double> degree;  // k_i = sum adj + 2*self
  double two_m = 0.0;          // sum of degrees

  std::size_t size() const { return adj.size(); }
};

LouvainGraph from_view(const graph::UndirectedView& view) {
  LouvainGraph g;
  g.adj.resize(view.node_count);
  g.self.assign(view.node_count, 0.0);
  for (const auto& [key, w] : view.edges) {
    g.adj[key.first].emplace_back(key.second, w);
    g.adj[key.second].emplace_back(key.first, w);
  }
  g.degree.assign(view.node_count, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (const auto& [j, w] : g.adj[i]) g.degree[i] += w;
    g.degree[i] += 2.0 * g.self[i];
    g.two_m += g.degree[i];
  }
  return g;
}

// One local-move phase. Returns the node->community map (compacted) and
// whether any node changed community.
std::pair<std::vector<int>, bool> local_moves(const LouvainGraph& g, std::uint64_t& rng) {
  const std::size_t n = g.size();
  std::vector<int> community(n);
  std::iota(community.begin(), community.end(), 0);
  std::vector<double> comm_degree(g.degree);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[bounded(rng, i)]);

  std::vector<double> weight_to(n, 0.0);
  bool any_move = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (const std::size_t node : order) {
      const int old_comm = community[node];
      std::vector<int> touched;
      for (const auto& [nbr, w] : g.adj[node]) {
        const int c = community[nbr];
        if (weight_to[c] == 0.0) touched.push_back(c);
        weight_to[c] += w;
      }

      comm_degree[old_comm] -= g.degree[node];
      // Gain of joining c (up to the constant 1/m factor):
      //   k_{i,c} - tot(c) * k_i / (2m)
      const double scale = g.degree[node] / g.two_m;
      const double stay_gain = weight_to[old_comm] - comm_degree[old_comm] * scale;
      int best_comm = old_comm;
      double best_gain = stay_gain;
      for (const int c : touched) {
        if (c == old_comm) continue;
        const double gain = weight_to[c] - comm_degree[c] * scale;
        if (gain > best_gain || (gain == best_gain && best_comm != old_comm && c < best_comm)) {
          best_gain = gain;
          best_comm = c;
        }
      }
      // Only strict improvements move; zero-gain shuffling cannot cycle.
      if (best_comm != old_comm && best_gain > stay_gain) {
        community[node] = best_comm;
        comm_degree[best_comm] += g.degree[node];
        moved = true;
        any_move = true;
      } else {
        comm_degree[old_comm] += g.degree[node];
      }

      for (const auto& [nbr, w] : g.adj[node]) weight_to[community[nbr]] = 0.0;
      weight_to[old_comm] = 0.0;
    }
  }

  // Compact community ids to 0..k-1 in first-appearance order.
  std::vector<int> remap(n, -1);
  int next_id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (remap[community[i]] < 0) remap[community[i]] = next_id++;
    community[i] = remap[community[i]];
  }
  return {community, any_move};
}

LouvainGraph induced(const LouvainGraph& g, const std::vector<int>& community) {
  int k = 0;
  for (int c : community) k = std::max(k, c + 1);
  LouvainGraph out;
  out.adj.resize(k);
  out.self.assign(k, 0.0);
  std::map<std::pair<int, int>, double> agg;
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.self[community[i]] += g.self[i];
    for (const auto& [j, w] : g.adj[i]) {
      if (j < static_cast<int>(i)) continue;  // each undirected pair once
      const int ci = community[i];
      const int cj = community[j];
      if (ci == cj) {
        out.self[ci] += w;
      } else {
        agg[std::minmax(ci, cj)] += w;
      }
    }
  }
  for (const auto& [key, w] : agg) {
    out.adj[key.first].emplace_back(key.second, w);
    out.adj[key.second].emplace_back(key.first, w);
  }
  out.degree.assign(k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (const auto& [j, w] : out.adj[i]) out.degree[i] += w;
    out.degree[i] += 2.0 * out.self[i];
    out.two_m += out.degree[i];
  }
  return out;
}

}  // namespace

std::pair<double, std::vector<int>> modularity(const graph::TradeNetwork& net,
                                               std::uint64_t seed) {
  const auto view = graph::undirected_view(net);
  if (view.edges.empty()) throw RuntimeFailure("modularity: empty network");

  std::uint64_t rng = derive_seed(seed, 0x6c6f757661696eULL);
  if (rng == 0) rng = 1;

  LouvainGraph g = from_view(view);
  std::vector<int> partition(view.node_count);
  std::iota(partition.begin(), partition.end(), 0);

  for (;;) {
    auto [community, any_move] = local_moves(g, rng);
    if (!any_move) break;
    for (auto& p : partition) p = community[p];
    const auto next = induced(g, community);
    if (next.size() == g.size()) break;
    g = next;
  }

  // Compact final ids in node order for a stable export.
  std::map<int, int> remap;
  for (auto& p : partition) {
    const auto [it, inserted] = remap.emplace(p, static_cast<int>(remap.size()));
    p = it->second;
  }
  return {modularity_q(view, partition), partition};
}

GlobalMetrics global_metrics(const graph::TradeNetwork& net, std::uint64_t seed) {
  GlobalMetrics g;
  g.density = density(net);
  g.reciprocity = reciprocity(net);
  // Degenerate networks leave transitivity/assortativity undefined; series
  // and panels carry an explicit missing marker instead.
  try {
    g.transitivity = transitivity(net);
  } catch (const RuntimeFailure&) {
    g.transitivity = std::nullopt;
  }
  try {
    g.assortativity = assortativity(net);
  } catch (const RuntimeFailure&) {
    g.assortativity = std::nullopt;
  }
  auto [q, partition] = modularity(net, seed);
  g.modularity = q;
  g.partition = std::move(partition);
  return g;
}

CentralityRanking centrality_ranking(const graph::TradeNetwork& net, int top_k) {
  if (top_k < 1) throw ConfigError("centrality ranking: top_k must be >= 1");
  const auto scores = pagerank_scores(net);
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return net.nodes()[a] < net.nodes()[b];
  });
  const double max_score = scores[idx.front()];

  CentralityRanking ranking;
  const std::size_t limit = std::min<std::size_t>(top_k, idx.size());
  for (std::size_t i = 0; i < limit; ++i) {
    ranking.entries.push_back({static_cast<int>(i + 1), net.nodes()[idx[i]],
                               100.0 * scores[idx[i]] / max_score});
  }
  return ranking;
}

MetricTable compute_metric_table(const std::vector<graph::TradeNetwork>& networks,
                                 std::uint64_t seed, int jobs) {
  MetricTable table;
  if (networks.empty()) return table;
  table.section = networks.front().section();
  for (const auto& net : networks)
    if (net.section() != table.section) throw RuntimeFailure("metric table: mixed sections");

  std::vector<PeriodMetrics> slots(networks.size());
  parallel_for(networks.size(), jobs, [&](std::size_t idx) {
    const auto& net = networks[idx];
    PeriodMetrics pm;
    pm.global = global_metrics(net, derive_seed(seed, fnv1a_hash(net.period())));
    const auto scores = pagerank_scores(net);
    for (std::size_t i = 0; i < net.node_count(); ++i) {
      NodeMetrics nm;
      nm.pagerank = scores[i];
      for (const auto& [other, w] : net.in_edges()[i]) nm.in_strength += w;
      for (const auto& [other, w] : net.out_edges()[i]) nm.out_strength += w;
      pm.nodes[net.nodes()[i]] = nm;
    }
    slots[idx] = std::move(pm);
  });
  for (std::size_t idx = 0; idx < networks.size(); ++idx)
    table.periods[networks[idx].period()] = std::move(slots[idx]);
  return table;
}

std::string export_metric_series(const MetricTable& table) {
  std::ostringstream out;
  out << "period,density,assortativity,reciprocity,transitivity,modularity\n";
  for (const auto& [period, pm] : table.periods) {
    out << period << ',' << format_double(pm.global.density) << ','
        << (pm.global.assortativity ? format_double(*pm.global.assortativity) : std::string())
        << ',' << format_double(pm.global.reciprocity) << ','
        << (pm.global.transitivity ? format_double(*pm.global.transitivity) : std::string())
        << ',' << format_double(pm.global.modularity) << '\n';
  }
  return out.str();
}

std::string export_ranking(const CentralityRanking& ranking) {
  std::ostringstream out;
  out << "rank,centrality_percent,country\n";
  for (const auto& entry : ranking.entries) {
    out << entry.rank << ',' << format_fixed(entry.percent, 0) << ',' << entry.country << '\n';
  }
  return out.str();
}

}  // namespace tradenet::metrics
