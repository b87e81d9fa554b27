#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <variant>
#include <vector>

#include "enermod/dispatch.hpp"
#include "enermod/modularity.hpp"
#include "enermod/network.hpp"
#include "enermod/rng.hpp"

namespace enermod {

struct LouvainConfig {
  Resolution resolution{};
  std::uint64_t seed = 0;
  Method method = Method::simulate;
  bool pruning = true;              // queue-based local optimization
  bool enforce_connectivity = true; // bar moves that disconnect the source
  int max_outer_iterations = 64;    // safety net; hitting it is a bug
  double lp_tol = 1e-6;
};

// A node id or a set of nested communities, as produced by aggregation.
class NestedCommunity {
 public:
  static NestedCommunity leaf(int node) { return NestedCommunity(node); }
  static NestedCommunity group(std::vector<NestedCommunity> children) {
    return NestedCommunity(std::move(children));
  }
  bool is_leaf() const { return std::holds_alternative<int>(value_); }
  int leaf_value() const { return std::get<int>(value_); }
  const std::vector<NestedCommunity>& children() const {
    return std::get<std::vector<NestedCommunity>>(value_);
  }

 private:
  explicit NestedCommunity(int node) : value_(node) {}
  explicit NestedCommunity(std::vector<NestedCommunity> children)
      : value_(std::move(children)) {}
  std::variant<int, std::vector<NestedCommunity>> value_;
};

// Recursive union of leaves, sorted and deduplicated.
Community flatten(const NestedCommunity& nested);

// True iff c without v is empty or still induces a connected subgraph.
bool is_connected_without(const EnergyNetwork& net, const Community& c, int v);

struct RunReport {
  Partition partition;
  double q = 0.0;
  int community_count = 0;
  long gain_evaluations = 0;
  int outer_iterations = 0;
  double wall_seconds = 0.0;
  long applied_moves = 0;
  double min_applied_gain = std::numeric_limits<double>::infinity();
};

// One aggregation level: super-nodes carrying their nested composition, the
// cached flat member set, and an undirected super-adjacency (self entries
// excluded). Level 0 has one leaf per network node.
struct LevelGraph {
  std::vector<NestedCommunity> nested;
  std::vector<std::vector<int>> flat;  // sorted global node indices
  std::vector<std::vector<int>> adj;   // sorted super indices
  int node_count() const { return static_cast<int>(nested.size()); }
};

LevelGraph initial_level(const EnergyNetwork& net);

// Collapses each community of super-nodes into one super-node; two
// super-nodes are adjacent iff any of their constituents were.
LevelGraph aggregate(const LevelGraph& g, const Partition& p);

struct LocalOptStats {
  long gain_evaluations = 0;
  long applied_moves = 0;
  double min_applied_gain = std::numeric_limits<double>::infinity();
  bool moved = false;
};

// One local-optimization phase over super-nodes. With cfg.pruning a
// seeded-shuffled queue revisits only neighbors of moved nodes; without it,
// full sweeps repeat until a sweep leaves the score unchanged. Gains are
// evaluated on flattened member sets against the original network.
Partition local_optimization(const EnergyNetwork& net, const LevelGraph& g,
                             const Partition& start, const LouvainConfig& cfg,
                             Rng& rng, EvalCache* cache,
                             LocalOptStats* stats = nullptr);

// Full detector: singleton start, local optimization and aggregation until
// no move applies; returns the flattened final partition. Deterministic for
// a fixed seed.
RunReport louvain(const EnergyNetwork& net, const LouvainConfig& cfg,
                  EvalCache* cache = nullptr);

}  // namespace enermod
