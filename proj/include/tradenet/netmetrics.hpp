#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tradenet/tradegraph.hpp"

namespace tradenet::metrics {

struct NodeMetrics {
  double in_strength = 0.0;
  double out_strength = 0.0;
  double pagerank = 0.0;
};

struct GlobalMetrics {
  double density = 0.0;
  std::optional<double> assortativity;  // empty when degree variance is zero
  double reciprocity = 0.0;
  std::optional<double> transitivity;  // empty below 3 nodes
  double modularity = 0.0;
  std::vector<int> partition;  // community id per node index
};

struct RankEntry {
  int rank = 0;
  std::string country;
  double percent = 0.0;  // 100 * score / max score, unrounded
};

struct CentralityRanking {
  std::vector<RankEntry> entries;
};

enum class StrengthDirection { kIn, kOut };

struct PagerankOptions {
  double damping = 0.85;
  double tol = 1e-10;  // L1 change threshold
  int max_iter = 1000;
};

// In-strength: total weight into the node (a country's imports in the
// section); out-strength: total weight out.
double strength(const graph::TradeNetwork& net, const std::string& node,
                StrengthDirection direction);

// Weighted PageRank on stored edge direction (origin -> destination), so
// score accumulates at large importers. Dangling nodes redistribute
// uniformly. Throws on non-convergence, reporting the residual.
std::vector<double> pagerank_scores(const graph::TradeNetwork& net, PagerankOptions opts = {});
std::map<std::string, double> pagerank(const graph::TradeNetwork& net, PagerankOptions opts = {});

double density(const graph::TradeNetwork& net);      // m / (n(n-1)), needs n >= 2
double reciprocity(const graph::TradeNetwork& net);  // reciprocated edges / m, needs m >= 1

// Global clustering of the binarized undirected view: 3*triangles / triples,
// 0 when there are no triples. Needs n >= 3.
double transitivity(const graph::TradeNetwork& net);

// Newman degree assortativity on the binarized undirected view: Pearson
// correlation of endpoint degrees over edges (both orientations). Throws
// "undefined assortativity" when degree variance is zero.
double assortativity(const graph::TradeNetwork& net);

// Louvain on the weighted undirected view, resolution 1.0, seeded node
// ordering. Returned Q is evaluated with the grouped Newman-Girvan formula
// on the final partition; the single-community Q is exactly 0.
std::pair<double, std::vector<int>> modularity(const graph::TradeNetwork& net,
                                               std::uint64_t seed);

// Shared Q evaluator: Q = sum_c [L_c/W - (D_c/(2W))^2].
double modularity_q(const graph::UndirectedView& view, const std::vector<int>& partition);

GlobalMetrics global_metrics(const graph::TradeNetwork& net, std::uint64_t seed);

// Top-k nodes by PageRank, percent = 100 * score / max. Ranked on unrounded
// values; ties broken by country code order.
CentralityRanking centrality_ranking(const graph::TradeNetwork& net, int top_k);

struct PeriodMetrics {
  GlobalMetrics global;
  std::map<std::string, NodeMetrics> nodes;
};

// All metrics for one section across periods, keyed by bucket label
// (lexicographic order is chronological within a granularity).
struct MetricTable {
  int section = 0;
  std::map<std::string, PeriodMetrics> periods;
};

// The (section, period) grid is embarrassingly parallel; per-period results
// land in indexed slots so any job count yields identical tables.
MetricTable compute_metric_table(const std::vector<graph::TradeNetwork>& networks,
                                 std::uint64_t seed, int jobs = 1);

// One row per period: period, density, assortativity, reciprocity,
// transitivity, modularity. Undefined assortativity exports as empty field.
std::string export_metric_series(const MetricTable& table);

// rank, centrality_percent, country. Percent rounded for display.
std::string export_ranking(const CentralityRanking& ranking);

}  // namespace tradenet::metrics
