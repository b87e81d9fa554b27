#pragma once

#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "enermod/network.hpp"
#include "enermod/simplex.hpp"

namespace enermod {

enum class Method { noflex, simulate, lp };

const char* to_string(Method m);
Method method_from_string(std::string_view s);

// Full dispatch schedule of an LP evaluation. Matrices are member-major and
// slice-minor: entry (i, t) lives at [i*h + t-1]; soc has h+1 slice
// boundaries per member at [i*(h+1) + t] for t = 0..h.
struct DispatchTrace {
  int horizon = 0;
  std::vector<int> members;      // sorted global node indices
  std::vector<EdgeSpec> edges;   // community-internal edges
  std::vector<double> demand_served;  // internally covered demand
  std::vector<double> supply_used;    // internally consumed supply
  std::vector<double> charge;         // energy absorbed into flexibility
  std::vector<double> discharge;      // energy dispatched from flexibility
  std::vector<double> soc;
  std::vector<double> flow;  // per internal edge and slice

  double at(const std::vector<double>& mat, int i, int t) const {
    return mat[static_cast<size_t>(i) * static_cast<size_t>(horizon) +
               static_cast<size_t>(t - 1)];
  }
  double soc_at(int i, int t) const {
    return soc[static_cast<size_t>(i) * static_cast<size_t>(horizon + 1) +
               static_cast<size_t>(t)];
  }
};

struct DispatchResult {
  double d = 0.0;  // demand coverable from inside the community
  Method method = Method::noflex;
  std::optional<DispatchTrace> trace;  // LP evaluations only
};

// Per-slice community balance: sum over slices of
// min(aggregate supply, aggregate demand). Ignores flexibility entirely.
DispatchResult d_noflex(const EnergyNetwork& net, const Community& c);

// Greedy single-storage walk over the horizon. All member flexibility is
// pooled; losses and flow limits are ignored. A virtual state of charge
// starts at zero and running upper/lower bounds stand in for the unknown
// initial charge; a final correction enforces the cyclic condition.
DispatchResult simulate_flex(const EnergyNetwork& net, const Community& c);

// LP formulation of community self-sufficiency: maximize internally served
// demand subject to nodal balance on internal edges, flow limits and
// efficiencies, per-node storage dynamics and cyclic state of charge.
struct LpModel {
  std::vector<int> members;         // sorted global node indices
  std::vector<int> internal_edges;  // indices into net.edges()
  int horizon = 0;
  lp::Problem problem;

  int member_count() const { return static_cast<int>(members.size()); }
  int edge_count() const { return static_cast<int>(internal_edges.size()); }
  // Variable layout: served, used, discharge, charge blocks of size K*h,
  // then soc with K*(h+1), then flows with E*h.
  int idx_served(int i, int t) const { return i * horizon + (t - 1); }
  int idx_used(int i, int t) const {
    return member_count() * horizon + i * horizon + (t - 1);
  }
  int idx_discharge(int i, int t) const {
    return 2 * member_count() * horizon + i * horizon + (t - 1);
  }
  int idx_charge(int i, int t) const {
    return 3 * member_count() * horizon + i * horizon + (t - 1);
  }
  int idx_soc(int i, int t) const {
    return 4 * member_count() * horizon + i * (horizon + 1) + t;
  }
  int idx_flow(int j, int t) const {
    return 4 * member_count() * horizon + member_count() * (horizon + 1) +
           j * horizon + (t - 1);
  }
};

LpModel build_lp(const EnergyNetwork& net, const Community& c);

// Solves build_lp(net, c) and returns the optimum with its full trace.
// Throws SolverError on numerical breakdown and std::logic_error if the
// solver claims infeasibility (impossible by construction).
DispatchResult lp_flex(const EnergyNetwork& net, const Community& c,
                       double tol = 1e-6);

// Total flow over the horizon on one internal edge of a traced result.
// Throws std::logic_error when the result has no trace or the edge is not
// internal to the evaluated community.
double edge_total_flow(const DispatchResult& result, const EdgeSpec& e);
double edge_total_flow(const DispatchResult& result, int from, int to);

// Re-checks a trace against all model constraints without the solver.
// Returns human-readable violations; empty means feasible within tol.
std::vector<std::string> check_trace(const EnergyNetwork& net,
                                     const DispatchTrace& trace, double tol);

// Memoizes d by (method, member set). Identical member sets return the
// stored double unchanged, so cached and uncached paths agree bit-for-bit.
// Safe for concurrent use.
class EvalCache {
 public:
  std::optional<double> find(Method m, std::span<const int> members) const;
  void store(Method m, std::span<const int> members, double d);
  size_t size() const;

 private:
  struct Key {
    Method method;
    std::vector<int> members;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    size_t operator()(const Key& k) const;
  };
  mutable std::shared_mutex mutex_;
  std::unordered_map<Key, double, KeyHash> map_;
};

// Cached evaluation of d for the selected method; d of an empty member set
// is 0 by definition.
double evaluate_d(const EnergyNetwork& net, std::span<const int> members,
                  Method method, EvalCache* cache = nullptr,
                  double lp_tol = 1e-6);

}  // namespace enermod
