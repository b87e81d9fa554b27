#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "enermod/dispatch.hpp"
#include "enermod/network.hpp"
#include "enermod/rng.hpp"

namespace enermod {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Parameters for seeded random networks. Enumeration-based oracles guard
// their own size limits; the generator itself also serves larger benchmark
// fixtures.
struct InstanceParams {
  std::uint64_t seed = 0;
  int node_count = 4;
  int horizon = 8;
  double edge_density = 0.5;  // fraction of the non-tree pairs added as edges
  Range demand{0.0, 2.0};
  Range supply{0.0, 2.0};
  Range soc_max{0.0, 4.0};
  Range f_max{0.0, 1.0};
  // When set, each node's f_max is ratio * soc_max instead of an independent
  // draw, making the pooled flexibility exactly representable by one storage.
  std::optional<double> f_max_to_soc_ratio;
  Range eta_u{1.0, 1.0};
  Range eta_p{1.0, 1.0};
  Range eta_f{1.0, 1.0};
  std::optional<Range> w_max;  // absent = unbounded flows
  double slice_duration_minutes = 15.0;
};

// Deterministic per seed: random spanning tree (each node attaches to an
// earlier one, so every index prefix is connected), then extra bidirectional
// edges per density, then uniform series and flexibility draws.
EnergyNetwork random_instance(const InstanceParams& params);

// Random connected community of the given size, grown from a random seed
// node across network edges.
Community random_connected_community(const EnergyNetwork& net, Rng& rng,
                                     int size);

inline constexpr int kEnumerationGuard = 10;

// Every partition of the nodes into non-empty disjoint covering communities,
// in restricted-growth order. With connected_only, partitions with any
// disconnected community are dropped. Throws when node_count exceeds the
// enumeration guard. The callback returns false to stop early.
void for_each_partition(const EnergyNetwork& net, bool connected_only,
                        const std::function<bool(const Partition&)>& fn);

std::vector<Partition> enumerate_connected_partitions(const EnergyNetwork& net);

struct BestPartition {
  Partition partition;
  double q = 0.0;
};

// Maximum-Q partition over all connected partitions. Ties within 1e-12 go to
// fewer communities, then lexicographically smaller canonical member lists.
BestPartition exhaustive_best_partition(const EnergyNetwork& net, double gamma,
                                        Method method,
                                        EvalCache* cache = nullptr,
                                        double lp_tol = 1e-6);

struct EquivalenceFailure {
  std::uint64_t seed = 0;
  std::string topology_json;
  std::string demand_csv;
  std::string supply_csv;
  std::vector<std::string> member_ids;
  double simulate_d = 0.0;
  double lp_d = 0.0;
};

struct EquivalenceReport {
  int trials = 0;
  int communities_checked = 0;
  std::vector<EquivalenceFailure> failures;
};

// Compares simulate_flex against lp_flex on random connected communities of
// lossless, flow-unconstrained instances with pooled-equivalent flexibility.
// Trial i uses seed base.seed + i. Failures carry the serialized instance
// for replay; they are report entries, not exceptions.
EquivalenceReport check_sim_lp_equivalence(const InstanceParams& base,
                                           int trials);

}  // namespace enermod
