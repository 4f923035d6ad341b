#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tradenet/ingest.hpp"

namespace tradenet::graph {

// Directed weighted trade network for one (section, period). Nodes are the
// countries incident to at least one positive flow, in code sort order.
// Weights are strictly positive; zero-value flows are never stored.
class TradeNetwork {
 public:
  TradeNetwork(std::vector<std::string> nodes, std::map<std::pair<int, int>, double> edges,
               int section, std::string period);

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::map<std::pair<int, int>, double>& edges() const { return edges_; }
  int section() const { return section_; }
  const std::string& period() const { return period_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  int node_index(const std::string& code) const;  // -1 when absent
  double weight(int from, int to) const;          // 0 when edge absent

  const std::vector<std::vector<std::pair<int, double>>>& out_edges() const { return out_; }
  const std::vector<std::vector<std::pair<int, double>>>& in_edges() const { return in_; }
  double total_weight() const { return total_weight_; }

 private:
  std::vector<std::string> nodes_;
  std::map<std::pair<int, int>, double> edges_;
  std::vector<std::vector<std::pair<int, double>>> out_, in_;
  double total_weight_ = 0.0;
  int section_ = 0;
  std::string period_;
};

// Symmetric projection: weight{u,v} = w(u->v) + w(v->u), keyed by (min,max).
struct UndirectedView {
  std::map<std::pair<int, int>, double> edges;
  std::size_t node_count = 0;

  double total_weight() const;
  std::vector<double> weighted_degrees() const;       // k_i = sum of incident weights
  std::vector<std::vector<int>> binary_adjacency() const;
};

TradeNetwork build_network(const ingest::FlowTable& table, int section,
                           const std::string& period);

UndirectedView undirected_view(const TradeNetwork& net);

// Edge-list text: "origin destination weight" per line, sorted.
std::string export_edge_list(const TradeNetwork& net);

}  // namespace tradenet::graph
