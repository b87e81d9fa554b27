#include "enermod/dispatch.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace enermod {

namespace {

void require_members(const EnergyNetwork& net, const Community& c) {
  if (c.members.empty()) throw ValidationError("empty community");
  for (size_t i = 0; i < c.members.size(); ++i) {
    const int v = c.members[i];
    if (v < 0 || v >= net.node_count()) {
      throw ValidationError("community references unknown node index " +
                            std::to_string(v));
    }
    if (i > 0 && c.members[i - 1] >= v) {
      throw ValidationError("community members must be sorted and unique");
    }
  }
}

// Aggregate demand and supply per slice, summed in member order.
void aggregate_series(const EnergyNetwork& net, std::span<const int> members,
                      std::vector<double>& demand, std::vector<double>& supply) {
  const size_t h = static_cast<size_t>(net.horizon());
  demand.assign(h, 0.0);
  supply.assign(h, 0.0);
  for (int v : members) {
    const NodeSpec& nd = net.node(v);
    for (size_t t = 0; t < h; ++t) {
      demand[t] += nd.demand[t];
      supply[t] += nd.supply[t];
    }
  }
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::noflex: return "noflex";
    case Method::simulate: return "simulate";
    case Method::lp: return "lp";
  }
  return "unknown";
}

Method method_from_string(std::string_view s) {
  if (s == "noflex") return Method::noflex;
  if (s == "simulate") return Method::simulate;
  if (s == "lp") return Method::lp;
  throw ValidationError("unknown method '" + std::string(s) +
                        "' (expected noflex, simulate or lp)");
}

DispatchResult d_noflex(const EnergyNetwork& net, const Community& c) {
  require_members(net, c);
  std::vector<double> demand, supply;
  aggregate_series(net, c.members, demand, supply);
  double d = 0.0;
  for (size_t t = 0; t < demand.size(); ++t) {
    d += std::min(supply[t], demand[t]);
  }
  return {d, Method::noflex, std::nullopt};
}

DispatchResult simulate_flex(const EnergyNetwork& net, const Community& c) {
  require_members(net, c);
  std::vector<double> demand, supply;
  aggregate_series(net, c.members, demand, supply);

  double power_cap = 0.0;   // pooled per-slice charge/discharge limit
  double energy_cap = 0.0;  // pooled storage capacity
  for (int v : c.members) {
    power_cap += net.node(v).flex.f_max;
    energy_cap += net.node(v).flex.soc_max;
  }

  double covered_by_supply = 0.0;
  double covered_by_flex = 0.0;
  double soc = 0.0;      // virtual state of charge, may run negative
  double soc_hi = 0.0;   // running extremes; their spread may not exceed
  double soc_lo = 0.0;   // energy_cap, or no initial charge could realize it
  for (size_t t = 0; t < demand.size(); ++t) {
    covered_by_supply += std::min(supply[t], demand[t]);
    double delta = supply[t] - demand[t];
    delta = std::max(std::min(delta, power_cap), -power_cap);
    if (delta > 0.0) {
      soc = std::min(soc + delta, soc_lo + energy_cap);
      soc_hi = std::max(soc_hi, soc);
    } else {
      const double before = soc;
      soc = std::max(soc + delta, soc_hi - energy_cap);
      soc_lo = std::min(soc_lo, soc);
      covered_by_flex += before - soc;
    }
    assert(soc_hi - soc_lo <= energy_cap + 1e-9);
    assert(soc >= soc_lo - 1e-9 && soc <= soc_hi + 1e-9);
  }
  // Cyclic condition: dispatch beyond what was stored is taken back.
  covered_by_flex += std::min(soc, 0.0);
  return {covered_by_supply + covered_by_flex, Method::simulate, std::nullopt};
}

LpModel build_lp(const EnergyNetwork& net, const Community& c) {
  require_members(net, c);
  LpModel model;
  model.members = c.members;
  model.internal_edges = induced_internal_edge_indices(net, c.members);
  model.horizon = net.horizon();
  const int k = model.member_count();
  const int ec = model.edge_count();
  const int h = model.horizon;

  lp::Problem& p = model.problem;
  p.objective.reserve(static_cast<size_t>(4 * k * h + k * (h + 1) + ec * h));
  for (int i = 0; i < k; ++i) {
    const NodeSpec& nd = net.node(model.members[static_cast<size_t>(i)]);
    // Served demand enters the objective; everything else is free to move.
    for (int t = 1; t <= h; ++t) {
      p.add_var(0.0, nd.demand[static_cast<size_t>(t - 1)], 1.0);
    }
  }
  for (int i = 0; i < k; ++i) {
    const NodeSpec& nd = net.node(model.members[static_cast<size_t>(i)]);
    for (int t = 1; t <= h; ++t) {
      p.add_var(0.0, nd.supply[static_cast<size_t>(t - 1)]);
    }
  }
  for (int pass = 0; pass < 2; ++pass) {  // discharge block, then charge block
    for (int i = 0; i < k; ++i) {
      const NodeSpec& nd = net.node(model.members[static_cast<size_t>(i)]);
      for (int t = 1; t <= h; ++t) p.add_var(0.0, nd.flex.f_max);
    }
  }
  for (int i = 0; i < k; ++i) {
    const NodeSpec& nd = net.node(model.members[static_cast<size_t>(i)]);
    for (int t = 0; t <= h; ++t) p.add_var(0.0, nd.flex.soc_max);
  }
  for (int j = 0; j < ec; ++j) {
    const EdgeSpec& e =
        net.edges()[static_cast<size_t>(model.internal_edges[static_cast<size_t>(j)])];
    for (int t = 1; t <= h; ++t) p.add_var(0.0, e.w_max);
  }

  // Nodal balance per member and slice:
  //   served + charge - used - discharge = inflow*eta_f - outflow
  std::vector<std::vector<std::pair<int, double>>> touching(
      static_cast<size_t>(k));  // (edge j, +1 out / -eta_f in)
  std::unordered_map<int, int> member_pos;
  for (int i = 0; i < k; ++i) member_pos[model.members[static_cast<size_t>(i)]] = i;
  for (int j = 0; j < ec; ++j) {
    const EdgeSpec& e =
        net.edges()[static_cast<size_t>(model.internal_edges[static_cast<size_t>(j)])];
    touching[static_cast<size_t>(member_pos.at(e.from))].push_back({j, 1.0});
    touching[static_cast<size_t>(member_pos.at(e.to))].push_back({j, -e.eta_f});
  }
  for (int i = 0; i < k; ++i) {
    for (int t = 1; t <= h; ++t) {
      std::vector<lp::RowEntry> row;
      row.reserve(4 + touching[static_cast<size_t>(i)].size());
      row.push_back({model.idx_served(i, t), 1.0});
      row.push_back({model.idx_charge(i, t), 1.0});
      row.push_back({model.idx_used(i, t), -1.0});
      row.push_back({model.idx_discharge(i, t), -1.0});
      for (auto [j, coef] : touching[static_cast<size_t>(i)]) {
        row.push_back({model.idx_flow(j, t), coef});
      }
      p.add_row(0.0, 0.0, std::move(row));
    }
  }
  // Storage recurrence and cyclic closure per member.
  for (int i = 0; i < k; ++i) {
    const FlexSpec& fx = net.node(model.members[static_cast<size_t>(i)]).flex;
    for (int t = 1; t <= h; ++t) {
      p.add_row(0.0, 0.0,
                {{model.idx_soc(i, t), 1.0},
                 {model.idx_soc(i, t - 1), -fx.eta_p},
                 {model.idx_charge(i, t), -fx.eta_u},
                 {model.idx_discharge(i, t), 1.0 / fx.eta_u}});
    }
    p.add_row(0.0, 0.0,
              {{model.idx_soc(i, 0), 1.0}, {model.idx_soc(i, h), -1.0}});
  }
  return model;
}

DispatchResult lp_flex(const EnergyNetwork& net, const Community& c,
                       double tol) {
  if (!(tol > 0.0)) throw ValidationError("lp tolerance must be positive");
  LpModel model = build_lp(net, c);
  lp::SolveOptions opts;
  opts.opt_tol = std::min(1e-9, tol);
  lp::Solution sol = lp::solve(model.problem, opts);
  if (sol.status == lp::Status::infeasible) {
    throw std::logic_error(
        "LP reported infeasible, but the zero assignment is always feasible");
  }
  if (sol.status != lp::Status::optimal) {
    throw SolverError(std::string("LP solve failed: ") +
                      lp::to_string(sol.status) + " after " +
                      std::to_string(sol.iterations) + " iterations");
  }

  DispatchTrace trace;
  trace.horizon = model.horizon;
  trace.members = model.members;
  for (int j : model.internal_edges) {
    trace.edges.push_back(net.edges()[static_cast<size_t>(j)]);
  }
  const int k = model.member_count();
  const int h = model.horizon;
  auto block = [&](int begin, int count) {
    return std::vector<double>(sol.x.begin() + begin,
                               sol.x.begin() + begin + count);
  };
  trace.demand_served = block(0, k * h);
  trace.supply_used = block(k * h, k * h);
  trace.discharge = block(2 * k * h, k * h);
  trace.charge = block(3 * k * h, k * h);
  trace.soc = block(4 * k * h, k * (h + 1));
  trace.flow = block(4 * k * h + k * (h + 1), model.edge_count() * h);

  // Independent feasibility recheck; a violated trace means the solver
  // drifted and the value cannot be trusted.
  std::vector<std::string> violations = check_trace(net, trace, tol);
  if (!violations.empty()) {
    throw SolverError("LP trace violates constraints: " + violations.front());
  }
  return {sol.objective, Method::lp, std::move(trace)};
}

double edge_total_flow(const DispatchResult& result, int from, int to) {
  if (!result.trace.has_value()) {
    throw std::logic_error("no trace: only LP results carry flows");
  }
  const DispatchTrace& tr = *result.trace;
  for (size_t j = 0; j < tr.edges.size(); ++j) {
    if (tr.edges[j].from == from && tr.edges[j].to == to) {
      double sum = 0.0;
      for (int t = 1; t <= tr.horizon; ++t) {
        sum += tr.flow[j * static_cast<size_t>(tr.horizon) +
                       static_cast<size_t>(t - 1)];
      }
      return sum;
    }
  }
  throw std::logic_error("edge not internal to the evaluated community");
}

double edge_total_flow(const DispatchResult& result, const EdgeSpec& e) {
  return edge_total_flow(result, e.from, e.to);
}

std::vector<std::string> check_trace(const EnergyNetwork& net,
                                     const DispatchTrace& tr, double tol) {
  std::vector<std::string> out;
  const int k = static_cast<int>(tr.members.size());
  const int h = tr.horizon;
  auto report = [&](const std::string& msg) {
    if (out.size() < 16) out.push_back(msg);
  };
  auto bound = [&](double v, double lo, double hi, const char* what, int i,
                   int t) {
    const double slack = tol * std::max(1.0, std::fabs(hi));
    if (v < lo - slack || v > hi + slack) {
      report(std::string(what) + " out of bounds at member " +
             std::to_string(i) + ", t=" + std::to_string(t));
    }
  };
  for (int i = 0; i < k; ++i) {
    const NodeSpec& nd = net.node(tr.members[static_cast<size_t>(i)]);
    for (int t = 1; t <= h; ++t) {
      bound(tr.at(tr.demand_served, i, t), 0.0,
            nd.demand[static_cast<size_t>(t - 1)], "served demand", i, t);
      bound(tr.at(tr.supply_used, i, t), 0.0,
            nd.supply[static_cast<size_t>(t - 1)], "used supply", i, t);
      bound(tr.at(tr.discharge, i, t), 0.0, nd.flex.f_max, "discharge", i, t);
      bound(tr.at(tr.charge, i, t), 0.0, nd.flex.f_max, "charge", i, t);
    }
    for (int t = 0; t <= h; ++t) {
      bound(tr.soc_at(i, t), 0.0, nd.flex.soc_max, "soc", i, t);
    }
    for (int t = 1; t <= h; ++t) {
      const double expect = tr.soc_at(i, t - 1) * nd.flex.eta_p +
                            tr.at(tr.charge, i, t) * nd.flex.eta_u -
                            tr.at(tr.discharge, i, t) / nd.flex.eta_u;
      if (std::fabs(tr.soc_at(i, t) - expect) >
          tol * std::max(1.0, std::fabs(expect))) {
        report("soc recurrence violated at member " + std::to_string(i) +
               ", t=" + std::to_string(t));
      }
    }
    if (std::fabs(tr.soc_at(i, 0) - tr.soc_at(i, h)) > tol) {
      report("cyclic soc violated at member " + std::to_string(i));
    }
  }
  for (size_t j = 0; j < tr.edges.size(); ++j) {
    const double cap = tr.edges[j].w_max;
    if (std::isinf(cap)) continue;
    for (int t = 1; t <= h; ++t) {
      const double f =
          tr.flow[j * static_cast<size_t>(h) + static_cast<size_t>(t - 1)];
      if (f < -tol || f > cap + tol * std::max(1.0, cap)) {
        report("flow limit violated on edge " + std::to_string(j) +
               ", t=" + std::to_string(t));
      }
    }
  }
  // Nodal balance against incident internal flows.
  for (int i = 0; i < k; ++i) {
    const int v = tr.members[static_cast<size_t>(i)];
    for (int t = 1; t <= h; ++t) {
      double lhs = tr.at(tr.demand_served, i, t) + tr.at(tr.charge, i, t) -
                   tr.at(tr.supply_used, i, t) - tr.at(tr.discharge, i, t);
      double rhs = 0.0;
      for (size_t j = 0; j < tr.edges.size(); ++j) {
        const double f =
            tr.flow[j * static_cast<size_t>(h) + static_cast<size_t>(t - 1)];
        if (tr.edges[j].to == v) rhs += tr.edges[j].eta_f * f;
        if (tr.edges[j].from == v) rhs -= f;
      }
      if (std::fabs(lhs - rhs) > tol * std::max(1.0, std::fabs(lhs))) {
        report("nodal balance violated at member " + std::to_string(i) +
               ", t=" + std::to_string(t));
      }
    }
  }
  return out;
}

size_t EvalCache::KeyHash::operator()(const Key& k) const {
  // Order-independent over members is unnecessary (keys are sorted), but the
  // mix must be stable across platforms.
  std::uint64_t h = 1469598103934665603ull ^ static_cast<std::uint64_t>(k.method);
  for (int v : k.members) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
    h *= 1099511628211ull;
  }
  return static_cast<size_t>(h);
}

std::optional<double> EvalCache::find(Method m,
                                      std::span<const int> members) const {
  Key key{m, std::vector<int>(members.begin(), members.end())};
  std::shared_lock lock(mutex_);
  auto it = map_.find(key);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

void EvalCache::store(Method m, std::span<const int> members, double d) {
  Key key{m, std::vector<int>(members.begin(), members.end())};
  std::unique_lock lock(mutex_);
  map_.emplace(std::move(key), d);
}

size_t EvalCache::size() const {
  std::shared_lock lock(mutex_);
  return map_.size();
}

double evaluate_d(const EnergyNetwork& net, std::span<const int> members,
                  Method method, EvalCache* cache, double lp_tol) {
  if (members.empty()) return 0.0;
  if (cache) {
    if (auto hit = cache->find(method, members)) return *hit;
  }
  Community c{std::vector<int>(members.begin(), members.end())};
  double d = 0.0;
  switch (method) {
    case Method::noflex: d = d_noflex(net, c).d; break;
    case Method::simulate: d = simulate_flex(net, c).d; break;
    case Method::lp: d = lp_flex(net, c, lp_tol).d; break;
  }
  if (cache) cache->store(method, members, d);
  return d;
}

}  // namespace enermod
