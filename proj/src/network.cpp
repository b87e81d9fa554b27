#include "enermod/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <utility>

namespace enermod {

namespace {

std::uint64_t pair_key(int u, int v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(v);
}

void check_series(const std::vector<double>& s, int horizon,
                  const std::string& node_id, const char* what) {
  if (static_cast<int>(s.size()) != horizon) {
    throw ValidationError("series length mismatch: node '" + node_id + "' " +
                          what + " has " + std::to_string(s.size()) +
                          " entries, horizon is " + std::to_string(horizon));
  }
  for (double x : s) {
    if (!std::isfinite(x) || x < 0.0) {
      throw ValidationError("negative or non-finite " + std::string(what) +
                            " at node '" + node_id + "'");
    }
  }
}

}  // namespace

EnergyNetwork::EnergyNetwork(TimeGrid time, std::vector<NodeSpec> nodes,
                             std::vector<EdgeSpec> edges)
    : time_(time), nodes_(std::move(nodes)), edges_(std::move(edges)) {
  if (time_.horizon < 1) throw ValidationError("horizon must be >= 1");
  if (!(time_.slice_duration_minutes > 0.0)) {
    throw ValidationError("slice duration must be positive");
  }
  if (nodes_.empty()) throw ValidationError("network has no nodes");

  const int n = node_count();
  node_demand_.assign(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const NodeSpec& nd = nodes_[static_cast<size_t>(i)];
    if (nd.id.empty()) throw ValidationError("empty node id");
    if (!index_.emplace(nd.id, i).second) {
      throw ValidationError("duplicate node id '" + nd.id + "'");
    }
    check_series(nd.demand, time_.horizon, nd.id, "demand");
    check_series(nd.supply, time_.horizon, nd.id, "supply");
    if (nd.flex.f_max < 0 || nd.flex.soc_max < 0) {
      throw ValidationError("negative flexibility limits at node '" + nd.id +
                            "'");
    }
    if (!(nd.flex.eta_u > 0.0 && nd.flex.eta_u <= 1.0) ||
        !(nd.flex.eta_p > 0.0 && nd.flex.eta_p <= 1.0)) {
      throw ValidationError("flexibility efficiency outside (0,1] at node '" +
                            nd.id + "'");
    }
    double s = 0.0;
    for (double x : nd.demand) s += x;
    node_demand_[static_cast<size_t>(i)] = s;
    total_demand_ += s;
  }

  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (size_t k = 0; k < edges_.size(); ++k) {
    const EdgeSpec& e = edges_[k];
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
      throw ValidationError("edge endpoint out of range");
    }
    if (e.from == e.to) {
      throw ValidationError("self-loop at node '" +
                            nodes_[static_cast<size_t>(e.from)].id + "'");
    }
    if (!(e.eta_f > 0.0 && e.eta_f <= 1.0)) {
      throw ValidationError("edge efficiency outside (0,1]");
    }
    if (std::isnan(e.w_max) || e.w_max < 0.0) {
      throw ValidationError("negative edge flow limit");
    }
    if (!edge_lookup_.emplace(pair_key(e.from, e.to), static_cast<int>(k))
             .second) {
      throw ValidationError("duplicate edge " +
                            nodes_[static_cast<size_t>(e.from)].id + " -> " +
                            nodes_[static_cast<size_t>(e.to)].id);
    }
    adj[static_cast<size_t>(e.from)].push_back(e.to);
  }
  for (const EdgeSpec& e : edges_) {
    if (!edge_lookup_.contains(pair_key(e.to, e.from))) {
      throw ValidationError("missing reverse edge for " +
                            nodes_[static_cast<size_t>(e.from)].id + " -> " +
                            nodes_[static_cast<size_t>(e.to)].id);
    }
  }

  adj_offsets_.assign(static_cast<size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) {
    auto& a = adj[static_cast<size_t>(i)];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    adj_offsets_[static_cast<size_t>(i) + 1] =
        adj_offsets_[static_cast<size_t>(i)] + static_cast<int>(a.size());
    adj_.insert(adj_.end(), a.begin(), a.end());
  }

  // Whole-graph connectivity over the undirected view.
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : neighbors(v)) {
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        ++reached;
        q.push(w);
      }
    }
  }
  if (reached != n) throw ValidationError("disconnected graph");
}

std::optional<int> EnergyNetwork::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const int> EnergyNetwork::neighbors(int v) const {
  const int b = adj_offsets_[static_cast<size_t>(v)];
  const int e = adj_offsets_[static_cast<size_t>(v) + 1];
  return {adj_.data() + b, static_cast<size_t>(e - b)};
}

std::optional<int> EnergyNetwork::edge_index(int u, int v) const {
  auto it = edge_lookup_.find(pair_key(u, v));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

double total_demand(const EnergyNetwork& net) { return net.total_demand(); }

std::vector<int> induced_internal_edge_indices(const EnergyNetwork& net,
                                               std::span<const int> members) {
  std::vector<char> in(static_cast<size_t>(net.node_count()), 0);
  for (int m : members) in[static_cast<size_t>(m)] = 1;
  std::vector<int> out;
  const auto& edges = net.edges();
  for (size_t k = 0; k < edges.size(); ++k) {
    if (in[static_cast<size_t>(edges[k].from)] &&
        in[static_cast<size_t>(edges[k].to)]) {
      out.push_back(static_cast<int>(k));
    }
  }
  return out;
}

std::vector<EdgeSpec> induced_internal_edges(const EnergyNetwork& net,
                                             const Community& c) {
  std::vector<EdgeSpec> out;
  for (int k : induced_internal_edge_indices(net, c.members)) {
    out.push_back(net.edges()[static_cast<size_t>(k)]);
  }
  return out;
}

bool is_passive(const NodeSpec& n) {
  if (n.flex.f_max != 0.0 || n.flex.soc_max != 0.0) return false;
  for (double x : n.demand)
    if (x != 0.0) return false;
  for (double x : n.supply)
    if (x != 0.0) return false;
  return true;
}

EnergyNetwork prune_passive_nodes(const EnergyNetwork& net) {
  const int n = net.node_count();
  // Working copy of the directed edge set keyed by endpoint pair.
  struct Attr {
    double w_max, eta_f;
  };
  std::map<std::pair<int, int>, Attr> live;
  std::vector<std::set<int>> nbrs(static_cast<size_t>(n));
  for (const EdgeSpec& e : net.edges()) {
    live[{e.from, e.to}] = {e.w_max, e.eta_f};
    nbrs[static_cast<size_t>(e.from)].insert(e.to);
    nbrs[static_cast<size_t>(e.to)].insert(e.from);
  }
  std::vector<char> removed(static_cast<size_t>(n), 0);

  for (int v = 0; v < n; ++v) {
    if (!is_passive(net.node(v))) continue;
    removed[static_cast<size_t>(v)] = 1;
    std::vector<int> around(nbrs[static_cast<size_t>(v)].begin(),
                            nbrs[static_cast<size_t>(v)].end());
    for (size_t a = 0; a < around.size(); ++a) {
      for (size_t b = a + 1; b < around.size(); ++b) {
        const int x = around[a], y = around[b];
        for (auto [s, t] : {std::pair{x, y}, std::pair{y, x}}) {
          auto in = live.find({s, v});
          auto out = live.find({v, t});
          if (in == live.end() || out == live.end()) continue;
          Attr merged{std::min(in->second.w_max, out->second.w_max),
                      in->second.eta_f * out->second.eta_f};
          auto [it, inserted] = live.try_emplace({s, t}, merged);
          if (!inserted) {
            it->second.w_max = std::max(it->second.w_max, merged.w_max);
            it->second.eta_f = std::max(it->second.eta_f, merged.eta_f);
          }
          nbrs[static_cast<size_t>(s)].insert(t);
          nbrs[static_cast<size_t>(t)].insert(s);
        }
      }
    }
    for (int w : around) {
      live.erase({v, w});
      live.erase({w, v});
      nbrs[static_cast<size_t>(w)].erase(v);
    }
    nbrs[static_cast<size_t>(v)].clear();
  }

  std::vector<int> new_index(static_cast<size_t>(n), -1);
  std::vector<NodeSpec> nodes;
  for (int v = 0; v < n; ++v) {
    if (removed[static_cast<size_t>(v)]) continue;
    new_index[static_cast<size_t>(v)] = static_cast<int>(nodes.size());
    nodes.push_back(net.node(v));
  }
  if (nodes.empty()) {
    throw ValidationError("pruning removed every node (all nodes passive)");
  }
  std::vector<EdgeSpec> edges;
  for (const auto& [key, attr] : live) {
    edges.push_back(EdgeSpec{new_index[static_cast<size_t>(key.first)],
                             new_index[static_cast<size_t>(key.second)],
                             attr.w_max, attr.eta_f});
  }
  return EnergyNetwork(net.time(), std::move(nodes), std::move(edges));
}

EnergyNetwork truncate_horizon(const EnergyNetwork& net, int horizon) {
  if (horizon < 1) throw ValidationError("horizon limit must be >= 1");
  if (horizon >= net.horizon()) return net;
  std::vector<NodeSpec> nodes = net.nodes();
  for (NodeSpec& nd : nodes) {
    nd.demand.resize(static_cast<size_t>(horizon));
    nd.supply.resize(static_cast<size_t>(horizon));
  }
  TimeGrid grid = net.time();
  grid.horizon = horizon;
  return EnergyNetwork(grid, std::move(nodes), net.edges());
}

bool community_connected(const EnergyNetwork& net,
                         std::span<const int> members) {
  if (members.empty()) throw ValidationError("empty community");
  if (members.size() == 1) return true;
  std::vector<char> in(static_cast<size_t>(net.node_count()), 0);
  for (int m : members) in[static_cast<size_t>(m)] = 1;
  std::vector<int> stack{members[0]};
  std::vector<char> seen(static_cast<size_t>(net.node_count()), 0);
  seen[static_cast<size_t>(members[0])] = 1;
  size_t reached = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : net.neighbors(v)) {
      if (in[static_cast<size_t>(w)] && !seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == members.size();
}

Community make_community(std::vector<int> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (members.empty()) throw ValidationError("empty community");
  return Community{std::move(members)};
}

std::vector<int> partition_assignment(const EnergyNetwork& net,
                                      const Partition& p) {
  std::vector<int> owner(static_cast<size_t>(net.node_count()), -1);
  for (size_t c = 0; c < p.communities.size(); ++c) {
    if (p.communities[c].members.empty()) {
      throw ValidationError("empty community in partition");
    }
    for (int v : p.communities[c].members) {
      if (v < 0 || v >= net.node_count()) {
        throw ValidationError("partition references unknown node");
      }
      if (owner[static_cast<size_t>(v)] != -1) {
        throw ValidationError("overlapping communities: node '" +
                              net.node(v).id + "' appears twice");
      }
      owner[static_cast<size_t>(v)] = static_cast<int>(c);
    }
  }
  for (int v = 0; v < net.node_count(); ++v) {
    if (owner[static_cast<size_t>(v)] == -1) {
      throw ValidationError("partition does not cover node '" + net.node(v).id +
                            "'");
    }
  }
  return owner;
}

void validate_partition(const EnergyNetwork& net, const Partition& p) {
  (void)partition_assignment(net, p);
}

bool networks_equal(const EnergyNetwork& a, const EnergyNetwork& b) {
  if (a.horizon() != b.horizon() ||
      a.time().slice_duration_minutes != b.time().slice_duration_minutes ||
      a.node_count() != b.node_count() ||
      a.edges().size() != b.edges().size()) {
    return false;
  }
  for (int i = 0; i < a.node_count(); ++i) {
    const NodeSpec& x = a.node(i);
    const NodeSpec& y = b.node(i);
    if (x.id != y.id || x.demand != y.demand || x.supply != y.supply ||
        x.flex.f_max != y.flex.f_max || x.flex.soc_max != y.flex.soc_max ||
        x.flex.eta_u != y.flex.eta_u || x.flex.eta_p != y.flex.eta_p) {
      return false;
    }
  }
  auto key = [](const EdgeSpec& e) { return std::pair{e.from, e.to}; };
  std::vector<EdgeSpec> ea = a.edges(), eb = b.edges();
  auto lt = [&](const EdgeSpec& l, const EdgeSpec& r) { return key(l) < key(r); };
  std::sort(ea.begin(), ea.end(), lt);
  std::sort(eb.begin(), eb.end(), lt);
  for (size_t k = 0; k < ea.size(); ++k) {
    if (key(ea[k]) != key(eb[k]) || ea[k].w_max != eb[k].w_max ||
        ea[k].eta_f != eb[k].eta_f) {
      return false;
    }
  }
  return true;
}

}  // namespace enermod
