#include "enermod/modularity.hpp"

#include <algorithm>
#include <stdexcept>

namespace enermod {

namespace {

double require_total_demand(const EnergyNetwork& net) {
  const double total = net.total_demand();
  if (!(total > 0.0)) throw ModelError("zero total demand");
  return total;
}

double member_demand(const EnergyNetwork& net, std::span<const int> members) {
  double s = 0.0;
  for (int v : members) s += net.node_demand(v);
  return s;
}

}  // namespace

void validate(const Resolution& r) {
  if (!(r.gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
}

double community_demand_fraction(const EnergyNetwork& net, const Community& c) {
  return member_demand(net, c.members) / require_total_demand(net);
}

double community_internal_fraction(const EnergyNetwork& net, const Community& c,
                                   Method method, EvalCache* cache,
                                   double lp_tol) {
  const double total = require_total_demand(net);
  return evaluate_d(net, c.members, method, cache, lp_tol) / total;
}

CommunityScore community_score(const EnergyNetwork& net, const Community& c,
                               double gamma, Method method, EvalCache* cache,
                               double lp_tol) {
  const double total = require_total_demand(net);
  CommunityScore s;
  if (c.members.empty()) return s;  // empty contributes nothing
  const double d = evaluate_d(net, c.members, method, cache, lp_tol);
  const double cd = member_demand(net, c.members);
  s.e = d / total;
  s.a = cd / total;
  s.q_c = s.e - gamma * s.a * s.a;
  s.self_sufficiency = cd > 0.0 ? d / cd : 1.0;
  return s;
}

double partition_modularity(const EnergyNetwork& net, const Partition& p,
                            double gamma, Method method, EvalCache* cache,
                            double lp_tol) {
  double q = 0.0;
  for (const Community& c : p.communities) {
    q += community_score(net, c, gamma, method, cache, lp_tol).q_c;
  }
  return q;
}

double modularity_gain(const EnergyNetwork& net, const Partition& p, int node,
                       int from_index, std::optional<int> to_index,
                       double gamma, Method method, EvalCache* cache,
                       double lp_tol) {
  if (from_index < 0 ||
      from_index >= static_cast<int>(p.communities.size())) {
    throw std::invalid_argument("source community index out of range");
  }
  const Community& from = p.communities[static_cast<size_t>(from_index)];
  if (!std::binary_search(from.members.begin(), from.members.end(), node)) {
    throw std::invalid_argument("node is not a member of the source community");
  }
  if (to_index.has_value() &&
      (*to_index < 0 || *to_index >= static_cast<int>(p.communities.size()))) {
    throw std::invalid_argument("target community index out of range");
  }
  if (to_index.has_value() && *to_index == from_index) return 0.0;  // no-op

  auto qc = [&](std::span<const int> members) {
    if (members.empty()) return 0.0;
    const double total = require_total_demand(net);
    const double d = evaluate_d(net, members, method, cache, lp_tol);
    const double a = member_demand(net, members) / total;
    return d / total - gamma * a * a;
  };

  std::vector<int> from_without;
  from_without.reserve(from.members.size() - 1);
  for (int v : from.members) {
    if (v != node) from_without.push_back(v);
  }
  std::vector<int> to_with;
  std::vector<int> to_members;
  if (to_index.has_value()) {
    to_members = p.communities[static_cast<size_t>(*to_index)].members;
  }
  to_with.resize(to_members.size() + 1);
  std::merge(to_members.begin(), to_members.end(), &node, &node + 1,
             to_with.begin());

  return qc(to_with) - qc(to_members) + qc(from_without) - qc(from.members);
}

}  // namespace enermod
