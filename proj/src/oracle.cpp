#include "enermod/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "enermod/io.hpp"

namespace enermod {

namespace {

double draw(Rng& rng, const Range& r) {
  if (r.hi <= r.lo) return r.lo;
  return rng.uniform(r.lo, r.hi);
}

}  // namespace

EnergyNetwork random_instance(const InstanceParams& params) {
  if (params.node_count < 1) throw ValidationError("node count must be >= 1");
  if (params.horizon < 1) throw ValidationError("horizon must be >= 1");
  if (!(params.edge_density >= 0.0 && params.edge_density <= 1.0)) {
    throw ValidationError("edge density must be in [0,1]");
  }
  Rng rng(params.seed);
  const int n = params.node_count;
  const int h = params.horizon;

  std::vector<NodeSpec> nodes;
  nodes.reserve(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) {
    NodeSpec nd;
    nd.id = "n" + std::to_string(v);
    nd.flex.soc_max = draw(rng, params.soc_max);
    nd.flex.f_max = params.f_max_to_soc_ratio
                        ? *params.f_max_to_soc_ratio * nd.flex.soc_max
                        : draw(rng, params.f_max);
    nd.flex.eta_u = draw(rng, params.eta_u);
    nd.flex.eta_p = draw(rng, params.eta_p);
    nd.demand.resize(static_cast<size_t>(h));
    nd.supply.resize(static_cast<size_t>(h));
    for (int t = 0; t < h; ++t) {
      nd.demand[static_cast<size_t>(t)] = draw(rng, params.demand);
      nd.supply[static_cast<size_t>(t)] = draw(rng, params.supply);
    }
    nodes.push_back(std::move(nd));
  }

  std::vector<EdgeSpec> edges;
  auto add_pair = [&](int u, int v) {
    EdgeSpec e;
    e.from = u;
    e.to = v;
    e.w_max = params.w_max ? draw(rng, *params.w_max) : kUnboundedFlow;
    e.eta_f = draw(rng, params.eta_f);
    edges.push_back(e);
    edges.push_back(EdgeSpec{v, u, e.w_max, e.eta_f});
  };
  // Spanning tree by random attachment keeps every index prefix connected.
  for (int v = 1; v < n; ++v) {
    add_pair(static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(v))),
             v);
  }
  std::vector<char> present(static_cast<size_t>(n) * static_cast<size_t>(n), 0);
  for (const EdgeSpec& e : edges) {
    present[static_cast<size_t>(e.from) * static_cast<size_t>(n) +
            static_cast<size_t>(e.to)] = 1;
  }
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (present[static_cast<size_t>(u) * static_cast<size_t>(n) +
                  static_cast<size_t>(v)]) {
        continue;
      }
      if (rng.uniform01() < params.edge_density) add_pair(u, v);
    }
  }
  TimeGrid grid{h, params.slice_duration_minutes};
  return EnergyNetwork(grid, std::move(nodes), std::move(edges));
}

Community random_connected_community(const EnergyNetwork& net, Rng& rng,
                                     int size) {
  const int n = net.node_count();
  if (size < 1 || size > n) throw ValidationError("invalid community size");
  std::vector<int> members{
      static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)))};
  std::vector<char> in(static_cast<size_t>(n), 0);
  in[static_cast<size_t>(members[0])] = 1;
  std::vector<int> frontier;
  auto grow_frontier = [&](int v) {
    for (int w : net.neighbors(v)) {
      if (!in[static_cast<size_t>(w)]) frontier.push_back(w);
    }
  };
  grow_frontier(members[0]);
  while (static_cast<int>(members.size()) < size) {
    // Drop frontier entries absorbed meanwhile.
    std::vector<int> alive;
    for (int w : frontier) {
      if (!in[static_cast<size_t>(w)]) alive.push_back(w);
    }
    std::sort(alive.begin(), alive.end());
    alive.erase(std::unique(alive.begin(), alive.end()), alive.end());
    frontier = alive;
    const int pick = frontier[static_cast<size_t>(
        rng.uniform_index(frontier.size()))];
    in[static_cast<size_t>(pick)] = 1;
    members.push_back(pick);
    grow_frontier(pick);
  }
  return make_community(std::move(members));
}

void for_each_partition(const EnergyNetwork& net, bool connected_only,
                        const std::function<bool(const Partition&)>& fn) {
  const int n = net.node_count();
  if (n > kEnumerationGuard) {
    throw ValidationError("partition enumeration is limited to " +
                          std::to_string(kEnumerationGuard) + " nodes");
  }
  // Restricted-growth strings: a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
  std::vector<int> a(static_cast<size_t>(n), 0);
  while (true) {
    int blocks = 0;
    for (int x : a) blocks = std::max(blocks, x + 1);
    Partition p;
    p.communities.resize(static_cast<size_t>(blocks));
    for (int v = 0; v < n; ++v) {
      p.communities[static_cast<size_t>(a[static_cast<size_t>(v)])]
          .members.push_back(v);
    }
    bool keep = true;
    if (connected_only) {
      for (const Community& c : p.communities) {
        if (!community_connected(net, c.members)) {
          keep = false;
          break;
        }
      }
    }
    if (keep && !fn(p)) return;

    // Advance to the next restricted-growth string.
    int i = n - 1;
    for (; i > 0; --i) {
      int prefix_max = 0;
      for (int j = 0; j < i; ++j) {
        prefix_max = std::max(prefix_max, a[static_cast<size_t>(j)]);
      }
      if (a[static_cast<size_t>(i)] <= prefix_max) {
        ++a[static_cast<size_t>(i)];
        std::fill(a.begin() + i + 1, a.end(), 0);
        break;
      }
    }
    if (i == 0) return;
  }
}

std::vector<Partition> enumerate_connected_partitions(
    const EnergyNetwork& net) {
  std::vector<Partition> out;
  for_each_partition(net, true, [&](const Partition& p) {
    out.push_back(p);
    return true;
  });
  return out;
}

BestPartition exhaustive_best_partition(const EnergyNetwork& net, double gamma,
                                        Method method, EvalCache* cache,
                                        double lp_tol) {
  if (!(net.total_demand() > 0.0)) throw ModelError("zero total demand");
  EvalCache local;
  if (!cache) cache = &local;

  auto canonical_less = [](const Partition& x, const Partition& y) {
    // Fewer communities first, then lexicographic member lists.
    if (x.communities.size() != y.communities.size()) {
      return x.communities.size() < y.communities.size();
    }
    auto key = [](const Partition& p) {
      std::vector<std::vector<int>> k;
      for (const Community& c : p.communities) k.push_back(c.members);
      std::sort(k.begin(), k.end());
      return k;
    };
    return key(x) < key(y);
  };

  BestPartition best;
  bool have = false;
  for_each_partition(net, true, [&](const Partition& p) {
    double q = 0.0;
    for (const Community& c : p.communities) {
      const double d = evaluate_d(net, c.members, method, cache, lp_tol);
      double cd = 0.0;
      for (int v : c.members) cd += net.node_demand(v);
      const double a = cd / net.total_demand();
      q += d / net.total_demand() - gamma * a * a;
    }
    if (!have || q > best.q + 1e-12) {
      best.partition = p;
      best.q = q;
      have = true;
    } else if (q >= best.q - 1e-12 && canonical_less(p, best.partition)) {
      best.partition = p;
      best.q = std::max(best.q, q);
    }
    return true;
  });
  return best;
}

EquivalenceReport check_sim_lp_equivalence(const InstanceParams& base,
                                           int trials) {
  if (base.eta_u.lo != 1.0 || base.eta_u.hi != 1.0 || base.eta_p.lo != 1.0 ||
      base.eta_p.hi != 1.0 || base.eta_f.lo != 1.0 || base.eta_f.hi != 1.0) {
    throw ValidationError(
        "equivalence check requires all efficiencies fixed at 1");
  }
  if (base.w_max.has_value()) {
    throw ValidationError("equivalence check requires unbounded flows");
  }
  if (!base.f_max_to_soc_ratio.has_value()) {
    throw ValidationError(
        "equivalence check requires proportional flexibility "
        "(f_max_to_soc_ratio)");
  }
  EquivalenceReport report;
  for (int trial = 0; trial < trials; ++trial) {
    InstanceParams params = base;
    params.seed = base.seed + static_cast<std::uint64_t>(trial);
    EnergyNetwork net = random_instance(params);
    Rng rng(params.seed ^ 0x9e3779b97f4a7c15ull);
    const int picks = 3;
    for (int p = 0; p < picks; ++p) {
      const int size = 1 + static_cast<int>(rng.uniform_index(
                               static_cast<std::uint64_t>(net.node_count())));
      Community c = random_connected_community(net, rng, size);
      const double sim = simulate_flex(net, c).d;
      const double lp = lp_flex(net, c, 1e-7).d;
      ++report.communities_checked;
      if (std::fabs(sim - lp) > 1e-6 * std::max(1.0, lp)) {
        EquivalenceFailure f;
        f.seed = params.seed;
        f.topology_json = serialize_topology(net);
        f.demand_csv = serialize_demand_csv(net);
        f.supply_csv = serialize_supply_csv(net);
        for (int v : c.members) f.member_ids.push_back(net.node(v).id);
        f.simulate_d = sim;
        f.lp_d = lp;
        report.failures.push_back(std::move(f));
      }
    }
    ++report.trials;
  }
  return report;
}

}  // namespace enermod
