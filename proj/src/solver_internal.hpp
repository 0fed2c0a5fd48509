#pragma once

#include <vector>

#include "dispatch/solver.hpp"

namespace dispatch::detail {

// Computational form shared by the LP and branch-and-bound paths:
// structural columns followed by one slack per row, equality rows,
// minimization costs (sign-flipped for maximize problems).
struct Core {
  int m = 0;
  int nstruct = 0;
  std::vector<std::vector<std::pair<int, double>>> cols;
  std::vector<double> lo, up, cost;
  std::vector<double> b;
  double obj_sign = 1.0;
  double obj_const = 0.0;
};

struct CoreSolution {
  double min_objective = 0.0;
  std::vector<double> x;  // structurals then slacks
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  long iterations = 0;
};

Core build_core(const LinearProgram& lp);

bool lp_dump_enabled();

// lo_struct/up_struct: optional overrides for the structural bounds (size nstruct).
SolveStatus solve_core(const Core& core, const double* lo_struct, const double* up_struct,
                       const SimplexOptions& opts, CoreSolution& out);

}  // namespace dispatch::detail
