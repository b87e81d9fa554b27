#pragma once

#include <stdexcept>

namespace enermod {

// Malformed or inconsistent user input (files, flags, partitions).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Well-formed input the model cannot evaluate (e.g. zero total demand).
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical breakdown or capacity limit in the LP solver.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace enermod
