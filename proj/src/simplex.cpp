#include "enermod/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "enermod/errors.hpp"

namespace enermod::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr int kMaxRows = 3000;  // dense inverse: beyond this is not desk scale

// Bounded-variable primal simplex over [A | -I] [x; r] = 0, where r carries
// the row activities and its bounds are the row bounds. The initial basis is
// the logical block, which is nonsingular by construction; a composite
// phase 1 drives bound violations of the basic logicals to zero when the
// all-lower-bound starting point is infeasible.
class Simplex {
 public:
  Simplex(const Problem& p, const SolveOptions& opts) : opts_(opts) {
    m_ = p.num_rows();
    n_ = p.num_vars();
    total_ = n_ + m_;
    if (m_ > kMaxRows) {
      throw SolverError("LP has " + std::to_string(m_) +
                        " rows; the built-in dense solver is limited to " +
                        std::to_string(kMaxRows) +
                        " (reduce the horizon or community size)");
    }
    cols_.resize(static_cast<size_t>(total_));
    lb_.assign(static_cast<size_t>(total_), 0.0);
    ub_.assign(static_cast<size_t>(total_), 0.0);
    obj_.assign(static_cast<size_t>(total_), 0.0);
    for (int j = 0; j < n_; ++j) {
      lb_[static_cast<size_t>(j)] = p.var_lb[static_cast<size_t>(j)];
      ub_[static_cast<size_t>(j)] = p.var_ub[static_cast<size_t>(j)];
      obj_[static_cast<size_t>(j)] = p.objective[static_cast<size_t>(j)];
      if (!std::isfinite(lb_[static_cast<size_t>(j)])) {
        throw SolverError("variable lower bounds must be finite");
      }
    }
    for (int i = 0; i < m_; ++i) {
      for (const RowEntry& e : p.rows[static_cast<size_t>(i)]) {
        cols_[static_cast<size_t>(e.col)].push_back({i, e.coef});
      }
      const int logical = n_ + i;
      cols_[static_cast<size_t>(logical)].push_back({i, -1.0});
      // Row lower bounds may be -inf; logicals start basic and the ratio
      // test never parks a variable at an infinite bound.
      lb_[static_cast<size_t>(logical)] = p.row_lb[static_cast<size_t>(i)];
      ub_[static_cast<size_t>(logical)] = p.row_ub[static_cast<size_t>(i)];
    }
  }

  Solution run() {
    init_basis();
    Solution sol;
    const int cap = opts_.max_iterations > 0
                        ? opts_.max_iterations
                        : std::min(500000, 2000 + 60 * (m_ + n_));
    int since_refactor = 0;
    int stall = 0;
    double last_merit = merit();
    bool bland = false;
    while (true) {
      if (iterations_ >= cap) {
        sol.status = Status::iteration_limit;
        break;
      }
      const bool phase1 = infeasibility() > opts_.feas_tol;
      int enter = -1;
      int dir = 0;
      if (!price(phase1, bland, enter, dir)) {
        if (phase1) {
          // No improving column while infeasible.
          if (!refactor_and_retry(since_refactor)) {
            sol.status = Status::infeasible;
            break;
          }
          continue;
        }
        // Optimal at current accuracy; refresh the factorization once to
        // confirm before reporting.
        if (!confirmed_) {
          if (!refactorize()) {
            sol.status = Status::numerical_failure;
            break;
          }
          recompute_basics();
          since_refactor = 0;
          confirmed_ = true;
          continue;
        }
        sol.status = Status::optimal;
        break;
      }
      confirmed_ = false;
      ++iterations_;
      ++since_refactor;

      ftran(enter);
      int leave_row = -1;
      double theta = 0.0;
      bool flip = false;
      bool leave_at_upper = false;
      if (!ratio_test(enter, dir, phase1, leave_row, theta, flip,
                      leave_at_upper)) {
        if (phase1) {
          sol.status = Status::numerical_failure;  // an improving ray cannot
        } else {                                   // exist while infeasible
          sol.status = Status::unbounded;
        }
        break;
      }
      apply_step(enter, dir, leave_row, theta, flip, leave_at_upper);

      if (since_refactor >= opts_.refactor_period) {
        if (!refactorize()) {
          sol.status = Status::numerical_failure;
          break;
        }
        recompute_basics();
        since_refactor = 0;
      }
      const double now = merit();
      if (now > last_merit + 1e-13) {
        last_merit = now;
        stall = 0;
        bland = false;
      } else if (++stall > 400) {
        bland = true;  // anti-cycling fallback
      }
    }

    sol.iterations = iterations_;
    if (sol.status == Status::optimal) {
      if (!refactorize()) {
        sol.status = Status::numerical_failure;
      } else {
        recompute_basics();
        if (infeasibility() > 100 * opts_.feas_tol) {
          sol.status = Status::numerical_failure;
        }
      }
    }
    if (sol.status == Status::optimal) {
      sol.x.assign(x_.begin(), x_.begin() + n_);
      for (int j = 0; j < n_; ++j) {
        // Snap residual noise onto the box.
        sol.x[static_cast<size_t>(j)] =
            std::min(std::max(sol.x[static_cast<size_t>(j)],
                              lb_[static_cast<size_t>(j)]),
                     ub_[static_cast<size_t>(j)]);
        sol.objective +=
            obj_[static_cast<size_t>(j)] * sol.x[static_cast<size_t>(j)];
      }
    }
    return sol;
  }

 private:
  struct ColEntry {
    int row;
    double coef;
  };

  void init_basis() {
    basis_.resize(static_cast<size_t>(m_));
    in_basis_.assign(static_cast<size_t>(total_), 0);
    at_upper_.assign(static_cast<size_t>(total_), 0);
    x_.assign(static_cast<size_t>(total_), 0.0);
    for (int j = 0; j < total_; ++j) {
      x_[static_cast<size_t>(j)] = lb_[static_cast<size_t>(j)];
    }
    binv_.assign(static_cast<size_t>(m_) * static_cast<size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i) {
      basis_[static_cast<size_t>(i)] = n_ + i;
      in_basis_[static_cast<size_t>(n_ + i)] = 1;
      binv_[static_cast<size_t>(i) * static_cast<size_t>(m_) +
            static_cast<size_t>(i)] = -1.0;  // B = -I
    }
    recompute_basics();
  }

  double infeasibility() const {
    double f = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int k = basis_[static_cast<size_t>(i)];
      const double v = x_[static_cast<size_t>(k)];
      if (v > ub_[static_cast<size_t>(k)]) f += v - ub_[static_cast<size_t>(k)];
      if (v < lb_[static_cast<size_t>(k)]) f += lb_[static_cast<size_t>(k)] - v;
    }
    return f;
  }

  double merit() const {
    const double inf = infeasibility();
    if (inf > opts_.feas_tol) return -inf;
    double z = 0.0;
    for (int j = 0; j < total_; ++j) {
      z += obj_[static_cast<size_t>(j)] * x_[static_cast<size_t>(j)];
    }
    return z;
  }

  // x_B = Binv * (-N x_N); b is zero by construction.
  void recompute_basics() {
    std::vector<double> rhs(static_cast<size_t>(m_), 0.0);
    for (int j = 0; j < total_; ++j) {
      if (in_basis_[static_cast<size_t>(j)]) continue;
      const double v = x_[static_cast<size_t>(j)];
      if (v == 0.0) continue;
      for (const ColEntry& e : cols_[static_cast<size_t>(j)]) {
        rhs[static_cast<size_t>(e.row)] -= e.coef * v;
      }
    }
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      const double* row = &binv_[static_cast<size_t>(i) * static_cast<size_t>(m_)];
      for (int r = 0; r < m_; ++r) s += row[r] * rhs[static_cast<size_t>(r)];
      x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = s;
    }
  }

  // Gauss-Jordan inverse of the current basis matrix.
  bool refactorize() {
    const size_t mm = static_cast<size_t>(m_);
    std::vector<double> a(mm * mm, 0.0);
    for (int i = 0; i < m_; ++i) {
      for (const ColEntry& e : cols_[static_cast<size_t>(basis_[static_cast<size_t>(i)])]) {
        a[static_cast<size_t>(e.row) * mm + static_cast<size_t>(i)] = e.coef;
      }
    }
    std::vector<double>& inv = binv_;
    std::fill(inv.begin(), inv.end(), 0.0);
    for (size_t i = 0; i < mm; ++i) inv[i * mm + i] = 1.0;
    for (size_t c = 0; c < mm; ++c) {
      size_t piv = c;
      double best = std::fabs(a[c * mm + c]);
      for (size_t r = c + 1; r < mm; ++r) {
        const double cand = std::fabs(a[r * mm + c]);
        if (cand > best) {
          best = cand;
          piv = r;
        }
      }
      if (best < 1e-12) return false;
      if (piv != c) {
        for (size_t k = 0; k < mm; ++k) {
          std::swap(a[piv * mm + k], a[c * mm + k]);
          std::swap(inv[piv * mm + k], inv[c * mm + k]);
        }
      }
      const double d = 1.0 / a[c * mm + c];
      for (size_t k = 0; k < mm; ++k) {
        a[c * mm + k] *= d;
        inv[c * mm + k] *= d;
      }
      for (size_t r = 0; r < mm; ++r) {
        if (r == c) continue;
        const double f = a[r * mm + c];
        if (f == 0.0) continue;
        for (size_t k = 0; k < mm; ++k) {
          a[r * mm + k] -= f * a[c * mm + k];
          inv[r * mm + k] -= f * inv[c * mm + k];
        }
      }
    }
    return true;
  }

  bool refactor_and_retry(int& since_refactor) {
    if (since_refactor == 0) return false;
    if (!refactorize()) return false;
    recompute_basics();
    since_refactor = 0;
    return true;
  }

  // Chooses an entering variable; returns false when none improves.
  bool price(bool phase1, bool bland, int& enter, int& dir) {
    std::vector<double> y(static_cast<size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i) {
      const int k = basis_[static_cast<size_t>(i)];
      double c;
      if (phase1) {
        const double v = x_[static_cast<size_t>(k)];
        if (v > ub_[static_cast<size_t>(k)] + opts_.feas_tol) {
          c = -1.0;  // pushing this basic down raises the merit
        } else if (v < lb_[static_cast<size_t>(k)] - opts_.feas_tol) {
          c = 1.0;
        } else {
          continue;
        }
      } else {
        c = obj_[static_cast<size_t>(k)];
        if (c == 0.0) continue;
      }
      const double* row = &binv_[static_cast<size_t>(i) * static_cast<size_t>(m_)];
      for (int r = 0; r < m_; ++r) y[static_cast<size_t>(r)] += c * row[r];
    }

    enter = -1;
    dir = 0;
    double best = opts_.opt_tol;
    for (int j = 0; j < total_; ++j) {
      if (in_basis_[static_cast<size_t>(j)]) continue;
      if (lb_[static_cast<size_t>(j)] == ub_[static_cast<size_t>(j)]) continue;
      double d = phase1 ? 0.0 : obj_[static_cast<size_t>(j)];
      for (const ColEntry& e : cols_[static_cast<size_t>(j)]) {
        d -= y[static_cast<size_t>(e.row)] * e.coef;
      }
      int cand_dir = 0;
      double score = 0.0;
      if (!at_upper_[static_cast<size_t>(j)] && d > opts_.opt_tol) {
        cand_dir = +1;
        score = d;
      } else if (at_upper_[static_cast<size_t>(j)] && d < -opts_.opt_tol) {
        cand_dir = -1;
        score = -d;
      }
      if (cand_dir == 0) continue;
      if (bland) {
        enter = j;
        dir = cand_dir;
        return true;
      }
      if (score > best) {
        best = score;
        enter = j;
        dir = cand_dir;
      }
    }
    return enter >= 0;
  }

  // w = Binv * A_enter
  void ftran(int enter) {
    w_.assign(static_cast<size_t>(m_), 0.0);
    for (const ColEntry& e : cols_[static_cast<size_t>(enter)]) {
      const double a = e.coef;
      const size_t r = static_cast<size_t>(e.row);
      for (int i = 0; i < m_; ++i) {
        w_[static_cast<size_t>(i)] +=
            a * binv_[static_cast<size_t>(i) * static_cast<size_t>(m_) + r];
      }
    }
  }

  // Basic k moves by -dir*w_i per unit step of the entering variable. Picks
  // the blocking row (ties: largest |w_i|) or a bound flip. In phase 1,
  // variables violating a bound block where the violation closes; feasible
  // ones block as usual.
  bool ratio_test(int enter, int dir, bool phase1, int& leave_row,
                  double& theta, bool& flip, bool& leave_at_upper) {
    double best = kInf;
    const double span =
        ub_[static_cast<size_t>(enter)] - lb_[static_cast<size_t>(enter)];
    if (std::isfinite(span)) best = span;
    leave_row = -1;
    leave_at_upper = false;
    double best_piv = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double wi = w_[static_cast<size_t>(i)];
      if (std::fabs(wi) <= kPivotTol) continue;
      const int k = basis_[static_cast<size_t>(i)];
      const double delta = -dir * wi;  // movement of x_k per unit theta
      const double v = x_[static_cast<size_t>(k)];
      const double lo = lb_[static_cast<size_t>(k)];
      const double hi = ub_[static_cast<size_t>(k)];
      double t = kInf;
      bool to_upper = false;
      if (phase1 && v < lo - opts_.feas_tol) {
        if (delta > 0.0) t = (lo - v) / delta;  // violation closes at lo
      } else if (phase1 && v > hi + opts_.feas_tol) {
        if (delta < 0.0) {
          t = (hi - v) / delta;
          to_upper = true;
        }
      } else if (delta < 0.0) {
        t = std::max(0.0, (v - lo) / -delta);
      } else if (std::isfinite(hi)) {
        t = std::max(0.0, (hi - v) / delta);
        to_upper = true;
      }
      if (t < best - 1e-12 || (t < best + 1e-12 && std::fabs(wi) > best_piv)) {
        best = t;
        leave_row = i;
        best_piv = std::fabs(wi);
        leave_at_upper = to_upper;
      }
    }
    if (!std::isfinite(best)) return false;
    theta = std::max(0.0, best);
    flip = leave_row < 0;
    return true;
  }

  void apply_step(int enter, int dir, int leave_row, double theta, bool flip,
                  bool leave_at_upper) {
    // Move the entering variable and shift the basics accordingly.
    for (int i = 0; i < m_; ++i) {
      const double wi = w_[static_cast<size_t>(i)];
      if (wi == 0.0) continue;
      x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] -=
          dir * theta * wi;
    }
    x_[static_cast<size_t>(enter)] += dir * theta;
    if (flip) {
      at_upper_[static_cast<size_t>(enter)] =
          at_upper_[static_cast<size_t>(enter)] ? 0 : 1;
      // Snap exactly onto the bound.
      x_[static_cast<size_t>(enter)] =
          at_upper_[static_cast<size_t>(enter)]
              ? ub_[static_cast<size_t>(enter)]
              : lb_[static_cast<size_t>(enter)];
      return;
    }
    const int leaving = basis_[static_cast<size_t>(leave_row)];
    at_upper_[static_cast<size_t>(leaving)] = leave_at_upper ? 1 : 0;
    x_[static_cast<size_t>(leaving)] = leave_at_upper
                                           ? ub_[static_cast<size_t>(leaving)]
                                           : lb_[static_cast<size_t>(leaving)];
    in_basis_[static_cast<size_t>(leaving)] = 0;
    in_basis_[static_cast<size_t>(enter)] = 1;
    basis_[static_cast<size_t>(leave_row)] = enter;
    at_upper_[static_cast<size_t>(enter)] = 0;

    // Eta update: replace column leave_row of B.
    const size_t mm = static_cast<size_t>(m_);
    const size_t r = static_cast<size_t>(leave_row);
    const double piv = w_[r];
    double* prow = &binv_[r * mm];
    const double inv_piv = 1.0 / piv;
    for (size_t k = 0; k < mm; ++k) prow[k] *= inv_piv;
    for (size_t i = 0; i < mm; ++i) {
      if (i == r) continue;
      const double f = w_[i];
      if (f == 0.0) continue;
      double* row = &binv_[i * mm];
      for (size_t k = 0; k < mm; ++k) row[k] -= f * prow[k];
    }
  }

  const SolveOptions opts_;
  int m_ = 0, n_ = 0, total_ = 0;
  std::vector<std::vector<ColEntry>> cols_;
  std::vector<double> lb_, ub_, obj_;
  std::vector<int> basis_;
  std::vector<char> in_basis_, at_upper_;
  std::vector<double> x_;
  std::vector<double> binv_;
  std::vector<double> w_;
  int iterations_ = 0;
  bool confirmed_ = false;
};

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

int Problem::add_var(double lb, double ub, double obj) {
  var_lb.push_back(lb);
  var_ub.push_back(ub);
  objective.push_back(obj);
  return num_vars() - 1;
}

int Problem::add_row(double lb, double ub, std::vector<RowEntry> entries) {
  row_lb.push_back(lb);
  row_ub.push_back(ub);
  rows.push_back(std::move(entries));
  return num_rows() - 1;
}

Solution solve(const Problem& p, const SolveOptions& opts) {
  Simplex s(p, opts);
  return s.run();
}

}  // namespace enermod::lp
