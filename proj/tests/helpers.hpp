#pragma once

#include <string>
#include <vector>

#include "enermod/network.hpp"

namespace enermod::testing {

struct NodeBuilder {
  std::string id;
  std::vector<double> demand;
  std::vector<double> supply;
  double f_max = 0.0;
  double soc_max = 0.0;
  double eta_u = 1.0;
  double eta_p = 1.0;
};

struct EdgeBuilder {
  std::string from;
  std::string to;
  double w_max = kUnboundedFlow;
  double eta_f = 1.0;
};

// Assembles a network from id-based specs; every edge is expanded into both
// directions with the same attributes.
inline EnergyNetwork build_net(int horizon, std::vector<NodeBuilder> nodes,
                               std::vector<EdgeBuilder> edges) {
  std::vector<NodeSpec> ns;
  std::vector<std::string> ids;
  for (auto& b : nodes) {
    NodeSpec n;
    n.id = b.id;
    n.demand = b.demand.empty()
                   ? std::vector<double>(static_cast<size_t>(horizon), 0.0)
                   : b.demand;
    n.supply = b.supply.empty()
                   ? std::vector<double>(static_cast<size_t>(horizon), 0.0)
                   : b.supply;
    n.flex = FlexSpec{b.f_max, b.soc_max, b.eta_u, b.eta_p};
    ids.push_back(b.id);
    ns.push_back(std::move(n));
  }
  auto index = [&](const std::string& id) {
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) return static_cast<int>(i);
    }
    throw std::runtime_error("unknown id in test builder: " + id);
  };
  std::vector<EdgeSpec> es;
  for (auto& b : edges) {
    const int u = index(b.from);
    const int v = index(b.to);
    es.push_back(EdgeSpec{u, v, b.w_max, b.eta_f});
    es.push_back(EdgeSpec{v, u, b.w_max, b.eta_f});
  }
  return EnergyNetwork(TimeGrid{horizon, 15.0}, std::move(ns), std::move(es));
}

// Two nodes, two slices: u only demands [1,1], v only supplies [1,1].
inline EnergyNetwork fixture_a() {
  return build_net(2,
                   {{.id = "u", .demand = {1, 1}, .supply = {0, 0}},
                    {.id = "v", .demand = {0, 0}, .supply = {1, 1}}},
                   {{.from = "u", .to = "v"}});
}

inline EnergyNetwork single_node(std::vector<double> demand,
                                 std::vector<double> supply, double f_max = 0,
                                 double soc_max = 0, double eta_u = 1,
                                 double eta_p = 1) {
  const int h = static_cast<int>(demand.size());
  return build_net(h, {{.id = "n0",
                        .demand = std::move(demand),
                        .supply = std::move(supply),
                        .f_max = f_max,
                        .soc_max = soc_max,
                        .eta_u = eta_u,
                        .eta_p = eta_p}},
                   {});
}

inline Community all_nodes(const EnergyNetwork& net) {
  std::vector<int> m(static_cast<size_t>(net.node_count()));
  for (int i = 0; i < net.node_count(); ++i) m[static_cast<size_t>(i)] = i;
  return Community{std::move(m)};
}

}  // namespace enermod::testing
