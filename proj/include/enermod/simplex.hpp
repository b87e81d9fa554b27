#pragma once

#include <string>
#include <vector>

namespace enermod::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit, numerical_failure };

const char* to_string(Status s);

struct RowEntry {
  int col = 0;
  double coef = 0.0;
};

// maximize objective' x  subject to  row_lb <= A x <= row_ub,
//                                    var_lb <= x <= var_ub.
// Equality rows use row_lb == row_ub. Variable lower bounds must be finite;
// upper bounds (row and variable) may be +infinity.
struct Problem {
  std::vector<double> objective;
  std::vector<double> var_lb, var_ub;
  std::vector<std::vector<RowEntry>> rows;
  std::vector<double> row_lb, row_ub;

  int num_vars() const { return static_cast<int>(var_lb.size()); }
  int num_rows() const { return static_cast<int>(row_lb.size()); }
  int add_var(double lb, double ub, double obj = 0.0);
  int add_row(double lb, double ub, std::vector<RowEntry> entries);
};

struct Solution {
  Status status = Status::numerical_failure;
  double objective = 0.0;
  std::vector<double> x;  // structural variables
  int iterations = 0;
};

struct SolveOptions {
  double feas_tol = 1e-8;   // tolerated bound violation
  double opt_tol = 1e-9;    // reduced-cost threshold
  int max_iterations = 0;   // 0 = scaled to problem size
  int refactor_period = 250;
};

// Dense desk-scale solver; throws SolverError when the row count exceeds
// its capacity. Deterministic: no randomness, fixed pivot rules.
Solution solve(const Problem& p, const SolveOptions& opts = {});

}  // namespace enermod::lp
