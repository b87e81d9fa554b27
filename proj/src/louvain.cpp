#include "enermod/louvain.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace enermod {

namespace {

// Gains closer than this are ties; a move must clear it to count as a
// strictly positive improvement, which also guarantees termination.
constexpr double kGainEps = 1e-12;

void collect_leaves(const NestedCommunity& n, std::vector<int>& out) {
  if (n.is_leaf()) {
    out.push_back(n.leaf_value());
    return;
  }
  for (const NestedCommunity& child : n.children()) collect_leaves(child, out);
}

// Shared state of one local-optimization phase.
struct Phase {
  const EnergyNetwork& net;
  const LevelGraph& g;
  const LouvainConfig& cfg;
  EvalCache* cache;
  LocalOptStats stats;

  std::vector<int> comm_of;                    // super-node -> slot
  std::vector<std::vector<int>> slot_supers;   // sorted super ids, may be empty
  std::vector<std::vector<int>> slot_flat;     // cached flat member union

  double total_demand_ = 0.0;

  Phase(const EnergyNetwork& n, const LevelGraph& lg, const LouvainConfig& c,
        EvalCache* ca)
      : net(n), g(lg), cfg(c), cache(ca) {
    total_demand_ = net.total_demand();
    if (!(total_demand_ > 0.0)) throw ModelError("zero total demand");
  }

  void load(const Partition& start) {
    comm_of.assign(static_cast<size_t>(g.node_count()), -1);
    slot_supers.clear();
    slot_flat.clear();
    for (const Community& c : start.communities) {
      const int slot = static_cast<int>(slot_supers.size());
      std::vector<int> supers = c.members;
      std::sort(supers.begin(), supers.end());
      for (int s : supers) {
        if (s < 0 || s >= g.node_count() ||
            comm_of[static_cast<size_t>(s)] != -1) {
          throw ValidationError("partition is not a disjoint cover of the graph");
        }
        comm_of[static_cast<size_t>(s)] = slot;
      }
      slot_flat.push_back(merge_flats(supers));
      slot_supers.push_back(std::move(supers));
    }
    for (int v : comm_of) {
      if (v == -1) throw ValidationError("partition does not cover the graph");
    }
  }

  std::vector<int> merge_flats(const std::vector<int>& supers) const {
    std::vector<int> out;
    for (int s : supers) {
      const auto& f = g.flat[static_cast<size_t>(s)];
      out.insert(out.end(), f.begin(), f.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  double qc(std::span<const int> members) {
    if (members.empty()) return 0.0;
    const double d =
        evaluate_d(net, members, cfg.method, cache, cfg.lp_tol);
    double cd = 0.0;
    for (int v : members) cd += net.node_demand(v);
    const double a = cd / total_demand_;
    return d / total_demand_ - cfg.resolution.gamma * a * a;
  }

  // Connectivity of a community of super-nodes with one removed, checked on
  // the super-adjacency. Every super-node is internally connected, so this
  // matches connectivity of the flattened set.
  bool connected_without(int slot, int v) const {
    const std::vector<int>& supers = slot_supers[static_cast<size_t>(slot)];
    if (supers.size() <= 2) return true;
    std::vector<int> rest;
    rest.reserve(supers.size() - 1);
    for (int s : supers) {
      if (s != v) rest.push_back(s);
    }
    std::vector<char> inside(static_cast<size_t>(g.node_count()), 0);
    for (int s : rest) inside[static_cast<size_t>(s)] = 1;
    std::vector<int> stack{rest[0]};
    inside[static_cast<size_t>(rest[0])] = 2;
    size_t reached = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int w : g.adj[static_cast<size_t>(u)]) {
        if (inside[static_cast<size_t>(w)] == 1) {
          inside[static_cast<size_t>(w)] = 2;
          ++reached;
          stack.push_back(w);
        }
      }
    }
    return reached == rest.size();
  }

  // Evaluates all candidate targets for super-node v and applies the best
  // strictly positive move. Returns true when a move was applied.
  bool try_move(int v, std::vector<int>* touched_neighbors) {
    const int ci = comm_of[static_cast<size_t>(v)];
    const auto& vflat = g.flat[static_cast<size_t>(v)];
    const bool alone = slot_supers[static_cast<size_t>(ci)].size() == 1;

    if (cfg.enforce_connectivity && !alone && !connected_without(ci, v)) {
      return false;  // every outbound move would disconnect the source
    }

    std::vector<int> candidates;
    for (int w : g.adj[static_cast<size_t>(v)]) {
      const int cw = comm_of[static_cast<size_t>(w)];
      if (cw != ci) candidates.push_back(cw);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());
    if (candidates.empty() && alone) return false;

    std::vector<int> ci_without;
    const auto& ci_flat = slot_flat[static_cast<size_t>(ci)];
    ci_without.reserve(ci_flat.size() - vflat.size());
    std::set_difference(ci_flat.begin(), ci_flat.end(), vflat.begin(),
                        vflat.end(), std::back_inserter(ci_without));
    const double qc_ci = qc(ci_flat);
    const double qc_ci_without = qc(ci_without);

    double best_gain = 0.0;
    int best_slot = -1;  // -1 = none, -2 = fresh singleton community
    std::vector<int> best_flat;
    auto consider = [&](int slot, double gain, std::vector<int>&& flat) {
      if (gain > best_gain + kGainEps &&
          (gain > kGainEps)) {
        best_gain = gain;
        best_slot = slot;
        best_flat = std::move(flat);
      }
    };
    for (int cj : candidates) {
      const auto& cj_flat = slot_flat[static_cast<size_t>(cj)];
      std::vector<int> cj_with(cj_flat.size() + vflat.size());
      std::merge(cj_flat.begin(), cj_flat.end(), vflat.begin(), vflat.end(),
                 cj_with.begin());
      ++stats.gain_evaluations;
      const double gain = qc(cj_with) - qc(cj_flat) + qc_ci_without - qc_ci;
      consider(cj, gain, std::move(cj_with));
    }
    if (!alone) {
      // Fresh singleton target enables community splits.
      ++stats.gain_evaluations;
      const double gain = qc(vflat) + qc_ci_without - qc_ci;
      consider(-2, gain, std::vector<int>(vflat.begin(), vflat.end()));
    }
    if (best_slot == -1) return false;

    int cj = best_slot;
    if (cj == -2) {
      cj = static_cast<int>(slot_supers.size());
      slot_supers.emplace_back();
      slot_flat.emplace_back();
    }
    assert(!cfg.enforce_connectivity || target_connected_with(cj, v));

    auto& from = slot_supers[static_cast<size_t>(ci)];
    from.erase(std::find(from.begin(), from.end(), v));
    slot_flat[static_cast<size_t>(ci)] = std::move(ci_without);
    auto& to = slot_supers[static_cast<size_t>(cj)];
    to.insert(std::upper_bound(to.begin(), to.end(), v), v);
    slot_flat[static_cast<size_t>(cj)] = std::move(best_flat);
    comm_of[static_cast<size_t>(v)] = cj;

    ++stats.applied_moves;
    stats.min_applied_gain = std::min(stats.min_applied_gain, best_gain);
    stats.moved = true;
    if (touched_neighbors) {
      touched_neighbors->clear();
      for (int w : g.adj[static_cast<size_t>(v)]) {
        if (comm_of[static_cast<size_t>(w)] != cj) {
          touched_neighbors->push_back(w);
        }
      }
    }
    return true;
  }

  // Debug-only invariant: the target stays connected because v neighbors it.
  bool target_connected_with(int slot, int v) const {
    const auto& supers = slot_supers[static_cast<size_t>(slot)];
    if (supers.empty()) return true;
    for (int s : supers) {
      const auto& a = g.adj[static_cast<size_t>(s)];
      if (std::binary_search(a.begin(), a.end(), v)) return true;
    }
    return false;
  }

  double partition_q() {
    double q = 0.0;
    for (const auto& flat : slot_flat) {
      if (!flat.empty()) q += qc(flat);
    }
    return q;
  }

  Partition result() const {
    Partition p;
    for (const auto& supers : slot_supers) {
      if (!supers.empty()) p.communities.push_back(Community{supers});
    }
    return p;
  }
};

}  // namespace

Community flatten(const NestedCommunity& nested) {
  std::vector<int> leaves;
  collect_leaves(nested, leaves);
  return make_community(std::move(leaves));
}

bool is_connected_without(const EnergyNetwork& net, const Community& c,
                          int v) {
  if (!std::binary_search(c.members.begin(), c.members.end(), v)) {
    throw ValidationError("node is not a member of the community");
  }
  if (c.members.size() <= 2) return true;
  std::vector<int> rest;
  rest.reserve(c.members.size() - 1);
  for (int m : c.members) {
    if (m != v) rest.push_back(m);
  }
  return community_connected(net, rest);
}

LevelGraph initial_level(const EnergyNetwork& net) {
  LevelGraph g;
  const int n = net.node_count();
  g.nested.reserve(static_cast<size_t>(n));
  g.flat.reserve(static_cast<size_t>(n));
  g.adj.reserve(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) {
    g.nested.push_back(NestedCommunity::leaf(v));
    g.flat.push_back({v});
    auto nb = net.neighbors(v);
    g.adj.emplace_back(nb.begin(), nb.end());
  }
  return g;
}

LevelGraph aggregate(const LevelGraph& g, const Partition& p) {
  std::vector<int> owner(static_cast<size_t>(g.node_count()), -1);
  for (size_t c = 0; c < p.communities.size(); ++c) {
    for (int s : p.communities[c].members) {
      if (s < 0 || s >= g.node_count() || owner[static_cast<size_t>(s)] != -1) {
        throw ValidationError("invalid partition for aggregation");
      }
      owner[static_cast<size_t>(s)] = static_cast<int>(c);
    }
  }
  for (int o : owner) {
    if (o == -1) throw ValidationError("partition does not cover the graph");
  }

  LevelGraph out;
  const int k = static_cast<int>(p.communities.size());
  out.nested.reserve(static_cast<size_t>(k));
  out.flat.resize(static_cast<size_t>(k));
  out.adj.resize(static_cast<size_t>(k));
  for (int c = 0; c < k; ++c) {
    std::vector<int> supers = p.communities[static_cast<size_t>(c)].members;
    std::sort(supers.begin(), supers.end());
    std::vector<NestedCommunity> children;
    std::vector<int> flat;
    for (int s : supers) {
      children.push_back(g.nested[static_cast<size_t>(s)]);
      const auto& f = g.flat[static_cast<size_t>(s)];
      flat.insert(flat.end(), f.begin(), f.end());
    }
    std::sort(flat.begin(), flat.end());
    out.nested.push_back(NestedCommunity::group(std::move(children)));
    out.flat[static_cast<size_t>(c)] = std::move(flat);
  }
  for (int u = 0; u < g.node_count(); ++u) {
    for (int w : g.adj[static_cast<size_t>(u)]) {
      const int a = owner[static_cast<size_t>(u)];
      const int b = owner[static_cast<size_t>(w)];
      if (a != b) out.adj[static_cast<size_t>(a)].push_back(b);
    }
  }
  for (auto& a : out.adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return out;
}

Partition local_optimization(const EnergyNetwork& net, const LevelGraph& g,
                             const Partition& start, const LouvainConfig& cfg,
                             Rng& rng, EvalCache* cache,
                             LocalOptStats* stats) {
  validate(cfg.resolution);
  Phase phase(net, g, cfg, cache);
  phase.load(start);

  if (cfg.pruning) {
    std::vector<int> order(static_cast<size_t>(g.node_count()));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::deque<int> queue(order.begin(), order.end());
    std::vector<char> queued(static_cast<size_t>(g.node_count()), 1);
    std::vector<int> touched;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      queued[static_cast<size_t>(v)] = 0;
      if (phase.try_move(v, &touched)) {
        // Revisit neighbors that ended up outside the new community.
        for (int w : touched) {
          if (!queued[static_cast<size_t>(w)]) {
            queued[static_cast<size_t>(w)] = 1;
            queue.push_back(w);
          }
        }
      }
    }
  } else {
    // Full sweeps in fresh random order until a sweep yields no improvement.
    double q_old = phase.partition_q();
    while (true) {
      std::vector<int> order(static_cast<size_t>(g.node_count()));
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order);
      for (int v : order) phase.try_move(v, nullptr);
      const double q_new = phase.partition_q();
      if (!(q_new > q_old + kGainEps)) break;
      q_old = q_new;
    }
  }

  if (stats) *stats = phase.stats;
  return phase.result();
}

RunReport louvain(const EnergyNetwork& net, const LouvainConfig& cfg,
                  EvalCache* cache) {
  validate(cfg.resolution);
  if (!(net.total_demand() > 0.0)) throw ModelError("zero total demand");
  const auto start_time = std::chrono::steady_clock::now();

  Rng rng(cfg.seed);
  RunReport report;
  LevelGraph level = initial_level(net);
  while (true) {
    if (report.outer_iterations >= cfg.max_outer_iterations) {
      throw std::logic_error(
          "louvain exceeded max_outer_iterations; aggregation must shrink "
          "the graph every round");
    }
    ++report.outer_iterations;

    Partition singletons;
    for (int v = 0; v < level.node_count(); ++v) {
      singletons.communities.push_back(Community{{v}});
    }
    LocalOptStats stats;
    Partition optimized =
        local_optimization(net, level, singletons, cfg, rng, cache, &stats);
    report.gain_evaluations += stats.gain_evaluations;
    report.applied_moves += stats.applied_moves;
    report.min_applied_gain =
        std::min(report.min_applied_gain, stats.min_applied_gain);
    if (!stats.moved) break;
    level = aggregate(level, optimized);
  }

  for (const auto& flat : level.flat) {
    report.partition.communities.push_back(Community{flat});
  }
  std::sort(report.partition.communities.begin(),
            report.partition.communities.end(),
            [](const Community& a, const Community& b) {
              return a.members.front() < b.members.front();
            });
  validate_partition(net, report.partition);
  report.community_count =
      static_cast<int>(report.partition.communities.size());
  report.q = partition_modularity(net, report.partition, cfg.resolution.gamma,
                                  cfg.method, cache, cfg.lp_tol);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    start_time)
          .count();
  return report;
}

}  // namespace enermod
