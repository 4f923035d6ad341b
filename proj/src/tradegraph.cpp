#include "tradenet/tradegraph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "tradenet/common.hpp"

namespace tradenet::graph {

TradeNetwork::TradeNetwork(std::vector<std::string> nodes,
                           std::map<std::pair<int, int>, double> edges, int section,
                           std::string period)
    : nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      section_(section),
      period_(std::move(period)) {
  out_.resize(nodes_.size());
  in_.resize(nodes_.size());
  for (const auto& [key, w] : edges_) {
    out_[key.first].emplace_back(key.second, w);
    in_[key.second].emplace_back(key.first, w);
    total_weight_ += w;
  }
}

int TradeNetwork::node_index(const std::string& code) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), code);
  if (it == nodes_.end() || *it != code) return -1;
  return static_cast<int>(it - nodes_.begin());
}

double TradeNetwork::weight(int from, int to) const {
  const auto it = edges_.find({from, to});
  return it == edges_.end() ? 0.0 : it->second;
}

double UndirectedView::total_weight() const {
  double total = 0.0;
  for (const auto& [key, w] : edges) total += w;
  return total;
}

std::vector<double> UndirectedView::weighted_degrees() const {
  std::vector<double> k(node_count, 0.0);
  for (const auto& [key, w] : edges) {
    k[key.first] += w;
    k[key.second] += w;
  }
  return k;
}

std::vector<std::vector<int>> UndirectedView::binary_adjacency() const {
  std::vector<std::vector<int>> adj(node_count);
  for (const auto& [key, w] : edges) {
    adj[key.first].push_back(key.second);
    adj[key.second].push_back(key.first);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  return adj;
}

TradeNetwork build_network(const ingest::FlowTable& table, int section,
                           const std::string& period) {
  std::set<std::string> countries;
  std::vector<std::pair<std::pair<std::string, std::string>, double>> flows;
  for (const auto& [key, value] : table.entries) {
    if (key.section != section || key.bucket != period) continue;
    if (value <= 0.0) continue;
    countries.insert(key.origin);
    countries.insert(key.destination);
    flows.push_back({{key.origin, key.destination}, value});
  }
  if (flows.empty())
    throw RuntimeFailure("empty network: section " + std::to_string(section) + ", period " +
                         period);

  std::vector<std::string> nodes(countries.begin(), countries.end());
  std::map<std::pair<int, int>, double> edges;
  auto index_of = [&](const std::string& code) {
    return static_cast<int>(std::lower_bound(nodes.begin(), nodes.end(), code) - nodes.begin());
  };
  for (const auto& [od, w] : flows) edges[{index_of(od.first), index_of(od.second)}] = w;
  return TradeNetwork(std::move(nodes), std::move(edges), section, period);
}

UndirectedView undirected_view(const TradeNetwork& net) {
  UndirectedView view;
  view.node_count = net.node_count();
  for (const auto& [key, w] : net.edges()) {
    const auto pair = std::minmax(key.first, key.second);
    view.edges[{pair.first, pair.second}] += w;
  }
  return view;
}

std::string export_edge_list(const TradeNetwork& net) {
  std::ostringstream out;
  for (const auto& [key, w] : net.edges()) {
    out << net.nodes()[key.first] << ' ' << net.nodes()[key.second] << ' ' << format_double(w)
        << '\n';
  }
  return out.str();
}

}  // namespace tradenet::graph
