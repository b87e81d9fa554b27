#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "enermod/errors.hpp"

namespace enermod {

inline constexpr double kUnboundedFlow =
    std::numeric_limits<double>::infinity();

struct TimeGrid {
  int horizon = 1;                       // number of time slices, >= 1
  double slice_duration_minutes = 15.0;  // metadata only, never converted
};

// Storage-like flexibility attached to a node. A node without flexibility
// has f_max == soc_max == 0.
struct FlexSpec {
  double f_max = 0.0;    // max charge/discharge energy per slice
  double soc_max = 0.0;  // storage capacity
  double eta_u = 1.0;    // usage efficiency, (0,1]
  double eta_p = 1.0;    // per-slice preservation efficiency, (0,1]
};

struct NodeSpec {
  std::string id;
  FlexSpec flex;
  std::vector<double> demand;  // one entry per slice, >= 0
  std::vector<double> supply;
};

// Directed edge between dense node indices. Bidirectional input entries are
// expanded into two of these.
struct EdgeSpec {
  int from = -1;
  int to = -1;
  double w_max = kUnboundedFlow;  // per-slice flow limit
  double eta_f = 1.0;             // flow efficiency, (0,1]
};

// Non-empty set of node indices; kept sorted and unique.
struct Community {
  std::vector<int> members;
};

// Disjoint cover of all network nodes.
struct Partition {
  std::vector<Community> communities;
};

// Time-expanded energy graph. Immutable after construction; all accessors
// are const and safe to share across threads. Node indices are dense and
// follow input order.
class EnergyNetwork {
 public:
  EnergyNetwork(TimeGrid time, std::vector<NodeSpec> nodes,
                std::vector<EdgeSpec> edges);

  const TimeGrid& time() const { return time_; }
  int horizon() const { return time_.horizon; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const NodeSpec& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<EdgeSpec>& edges() const { return edges_; }

  std::optional<int> index_of(std::string_view id) const;

  // Neighbor indices in the undirected view, sorted ascending.
  std::span<const int> neighbors(int v) const;

  // Index into edges() for the directed edge u->v, if present.
  std::optional<int> edge_index(int u, int v) const;

  // Sum of demand over all nodes and slices.
  double total_demand() const { return total_demand_; }
  // Sum of one node's demand over all slices.
  double node_demand(int v) const { return node_demand_[static_cast<size_t>(v)]; }

 private:
  TimeGrid time_;
  std::vector<NodeSpec> nodes_;
  std::vector<EdgeSpec> edges_;
  std::unordered_map<std::string, int> index_;
  std::vector<int> adj_offsets_;  // CSR layout of the undirected adjacency
  std::vector<int> adj_;
  std::unordered_map<std::uint64_t, int> edge_lookup_;
  std::vector<double> node_demand_;
  double total_demand_ = 0.0;
};

// Sum of demand over all nodes and slices.
double total_demand(const EnergyNetwork& net);

// Edges with both endpoints inside the community.
std::vector<EdgeSpec> induced_internal_edges(const EnergyNetwork& net,
                                             const Community& c);
// Same, but as indices into net.edges().
std::vector<int> induced_internal_edge_indices(const EnergyNetwork& net,
                                               std::span<const int> members);

// True when the node carries no demand, no supply and no flexibility.
bool is_passive(const NodeSpec& n);

// Removes passive nodes, reconnecting each removed node's neighbors pairwise.
// A new edge takes the smaller flow limit and the product of the two replaced
// efficiencies; when it duplicates an existing edge, the larger limit and the
// larger efficiency win. Idempotent.
EnergyNetwork prune_passive_nodes(const EnergyNetwork& net);

// Copy limited to the first `horizon` slices (no-op when horizon covers all).
EnergyNetwork truncate_horizon(const EnergyNetwork& net, int horizon);

// True when the members induce a connected subgraph (singletons count).
// Empty member sets are rejected.
bool community_connected(const EnergyNetwork& net, std::span<const int> members);

// Sorts and deduplicates; throws ValidationError on empty input.
Community make_community(std::vector<int> members);

// Node index -> community index; throws ValidationError unless the partition
// is a disjoint cover of all nodes by non-empty communities.
std::vector<int> partition_assignment(const EnergyNetwork& net,
                                      const Partition& p);
void validate_partition(const EnergyNetwork& net, const Partition& p);

// Structural equality: same time grid, same node sequence, same directed
// edge set (order-insensitive).
bool networks_equal(const EnergyNetwork& a, const EnergyNetwork& b);

}  // namespace enermod
