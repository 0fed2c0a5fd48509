#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dispatch/errors.hpp"

namespace dispatch {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { Le, Ge, Eq };
enum class ObjSense { Minimize, Maximize };
enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LinearTerm {
  int var = -1;
  double coef = 0.0;
};

struct VariableDef {
  std::string name;
  double lower = 0.0;
  double upper = kInfinity;
  double cost = 0.0;
};

struct RowDef {
  std::string name;
  std::vector<LinearTerm> terms;
  RowSense sense = RowSense::Le;
  double rhs = 0.0;
};

class LinearProgram {
 public:
  int add_variable(std::string name, double lower, double upper, double cost = 0.0);
  int add_row(std::string name, std::vector<LinearTerm> terms, RowSense sense, double rhs);
  void add_cost(int var, double delta);
  void set_bounds(int var, double lower, double upper);
  void set_objective_sense(ObjSense s) { sense_ = s; }
  void set_objective_constant(double c) { objective_constant_ = c; }

  int variable(const std::string& name) const;  // InvariantError if unknown
  std::optional<int> find_variable(const std::string& name) const;
  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const std::vector<VariableDef>& variables() const { return vars_; }
  const std::vector<RowDef>& rows() const { return rows_; }
  ObjSense objective_sense() const { return sense_; }
  double objective_constant() const { return objective_constant_; }

 private:
  std::vector<VariableDef> vars_;
  std::vector<RowDef> rows_;
  std::unordered_map<std::string, int> index_;
  ObjSense sense_ = ObjSense::Minimize;
  double objective_constant_ = 0.0;
};

// Binary-only integrality: every variable listed in `integral` must have
// bounds inside [0, 1].
struct MixedIntegerProgram {
  LinearProgram base;
  std::vector<int> integral;

  void mark_binary(int var) { integral.push_back(var); }
};

struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> values;         // per variable
  std::vector<double> duals;          // per row: d(objective)/d(rhs); LP solves only
  std::vector<double> reduced_costs;  // per variable; LP solves only
  long nodes = 0;                     // branch-and-bound nodes explored (MILP)

  bool optimal() const { return status == SolveStatus::Optimal; }
  double value(const LinearProgram& lp, const std::string& name) const;
};

struct SimplexOptions {
  long max_iterations = 0;    // 0: derived from problem size
  int refactor_interval = 64;
  double feas_tol = 1e-7;
  double dual_tol = 1e-9;
};

struct MilpOptions {
  double gap_tol = 1e-6;  // relative optimality gap
  long node_budget = 500000;
  double int_tol = 1e-6;
  // Feasibility hint: checked, and adopted as the initial incumbent when it
  // satisfies every row and integrality. Correctness never depends on it.
  std::optional<std::vector<double>> incumbent_hint;
  SimplexOptions lp;
};

Solution solve_lp(const LinearProgram& lp, const SimplexOptions& opts = {});
Solution solve_milp(const MixedIntegerProgram& mip, const MilpOptions& opts);
Solution solve_milp(const MixedIntegerProgram& mip, double gap_tol = 1e-6);

// Exhaustive enumeration over the binary assignments (guard: at most 20),
// solving the remaining LP for each. The reference oracle for solve_milp.
Solution brute_force_milp(const MixedIntegerProgram& mip, const SimplexOptions& opts = {});

// CPLEX-LP-dialect text form of a problem.
void write_lp_text(const MixedIntegerProgram& mip, std::ostream& out, const std::string& name);

// When the DISPATCH_LP_DUMP environment variable names a directory, writes
// <name>_<seq>.lp there; otherwise does nothing.
void maybe_dump_lp(const MixedIntegerProgram& mip, const std::string& name);

}  // namespace dispatch
