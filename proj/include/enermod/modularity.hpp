#pragma once

#include <optional>

#include "enermod/dispatch.hpp"
#include "enermod/network.hpp"

namespace enermod {

// Resolution parameter: < 1 favors larger communities, > 1 smaller ones.
struct Resolution {
  double gamma = 1.0;
};

void validate(const Resolution& r);

struct CommunityScore {
  double e = 0.0;    // internally coverable share of total network demand
  double a = 0.0;    // community share of total network demand
  double q_c = 0.0;  // e - gamma * a^2
  // d / community demand; 1 by convention when the community has no demand.
  double self_sufficiency = 1.0;
};

// a(c): community demand / total demand. Throws ModelError when the network
// has zero total demand.
double community_demand_fraction(const EnergyNetwork& net, const Community& c);

// e(c): d(c) / total demand, with d computed by the selected method.
double community_internal_fraction(const EnergyNetwork& net, const Community& c,
                                   Method method, EvalCache* cache = nullptr,
                                   double lp_tol = 1e-6);

CommunityScore community_score(const EnergyNetwork& net, const Community& c,
                               double gamma, Method method,
                               EvalCache* cache = nullptr, double lp_tol = 1e-6);

// Q(P): sum of community contributions, in partition order.
double partition_modularity(const EnergyNetwork& net, const Partition& p,
                            double gamma, Method method,
                            EvalCache* cache = nullptr, double lp_tol = 1e-6);

// Gain of moving `node` from communities[from_index] to
// communities[*to_index], or to a fresh singleton when to_index is empty.
// Evaluated as the four affected community contributions on flat member sets.
double modularity_gain(const EnergyNetwork& net, const Partition& p, int node,
                       int from_index, std::optional<int> to_index,
                       double gamma, Method method, EvalCache* cache = nullptr,
                       double lp_tol = 1e-6);

}  // namespace enermod
