#pragma once

#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dispatch/solver.hpp"

namespace dispatch {

// One recourse-stage constraint template. For the active scenario v it reads
//   a.x + sum_(j,k) c_jk x_j v_k + g.v + d.y <= rhs
// with x the first-stage variables and y the per-scenario recourse variables.
// Affinity in x and in v separately holds by this data form; the only
// nonlinearity is the x*v bilinear part, which is what the dualized
// subproblem linearizes.
struct ScenarioRow {
  std::string name;
  std::vector<LinearTerm> x_terms;
  std::vector<std::tuple<int, int, double>> xv_terms;  // (x var, v index, coef)
  std::vector<std::pair<int, double>> v_terms;         // (v index, coef)
  std::vector<LinearTerm> y_terms;                     // recourse indices
  double rhs = 0.0;
};

// First-stage program plus recourse row templates over the unit box: x must
// admit, for every v in [0,1]^n, recourse values y keeping every row feasible.
// Recourse variables are free continuous; put any bounds on them into rows.
struct TwoStageProblem {
  MixedIntegerProgram first_stage;
  int uncertainty_dim = 0;
  std::vector<std::string> recourse_names;
  std::vector<ScenarioRow> rows;

  void validate() const;
};

struct Scenario {
  std::vector<double> v;
};

struct SubproblemResult {
  double theta = 0.0;  // worst-case total feasibility slack, MW
  Scenario worst;
};

struct CcgIteration {
  int iteration = 0;
  double master_objective = 0.0;
  double theta = 0.0;
  std::vector<double> scenario;
};

struct CcgTrace {
  std::vector<CcgIteration> iterations;
  double terminal_theta = 0.0;
  bool converged = false;
};

// One JSON object per iteration: {"iter":..,"master_obj":..,"theta":..,"scenario":[..]}.
void write_trace_jsonl(const CcgTrace& trace, std::ostream& out);

MilpOptions default_subproblem_options();

struct CcgOptions {
  double epsilon = 1e-4;
  int max_iterations = 0;  // 0: 2^uncertainty_dim + 4
  MilpOptions master{};
  MilpOptions subproblem = default_subproblem_options();
  std::vector<Scenario> initial_scenarios;
};

struct CcgResult {
  std::vector<double> x;  // first-stage values, indexed like first_stage.base
  double master_objective = 0.0;
  std::vector<Scenario> scenarios;
  CcgTrace trace;
  int iterations = 0;
};

// First-stage program extended with one recourse block per scenario: fresh
// free y copies and the scenario rows instantiated at that v.
MixedIntegerProgram build_master(const TwoStageProblem& problem,
                                 const std::vector<Scenario>& scenarios);

// Worst-case slack at fixed x via the dualized inner LP: the slack costs of 1
// bound the duals into [0,1], the box maximum is attained at a binary vertex
// (the inner value is convex in v), and the dual-times-v products linearize
// exactly, so one MILP computes theta.
SubproblemResult solve_subproblem(const TwoStageProblem& problem,
                                  const std::vector<double>& x_fixed);
SubproblemResult solve_subproblem(const TwoStageProblem& problem,
                                  const std::vector<double>& x_fixed, const MilpOptions& opts);

// Exact reference: the slacked inner LP at all 2^n vertices. Refuses n > 12.
SubproblemResult enumerate_subproblem(const TwoStageProblem& problem,
                                      const std::vector<double>& x_fixed,
                                      const SimplexOptions& opts = {});

CcgResult run_ccg(const TwoStageProblem& problem, const CcgOptions& opts = {});

}  // namespace dispatch
