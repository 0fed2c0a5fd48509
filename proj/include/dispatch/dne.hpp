#pragma once

#include <string>
#include <vector>

#include "dispatch/model.hpp"
#include "dispatch/robust.hpp"
#include "dispatch/sampling.hpp"

namespace dispatch {

enum class DneFormulation { BigM, Extended };

// Budget on how many samples the extended formulation may exclude per unit
// and side. k_max is the sample count; k may grow up to it.
struct KBudget {
  int k = 0;
  int k_max = 0;
};

// Per-unit sample orderings behind the extended formulation. phi[j] lists
// sample positions by ascending realized output (descending headroom),
// gamma[j] by descending realized output; ties break to the smaller index.
struct SortedIndexSequences {
  std::vector<std::vector<int>> phi;
  std::vector<std::vector<int>> gamma;
};

struct DneConfig {
  DneFormulation formulation = DneFormulation::Extended;
  int initial_k = -1;  // -1: ceil(0.2 * sample count)
  CcgOptions ccg;
};

struct DneDecision {
  std::vector<double> lower, upper;  // per vrg, MW
  std::vector<double> base_vrg;      // scheduled vrg output w, MW
  std::vector<double> base_obp;      // conventional base points, MW
  std::vector<int> indicators;       // per-sample exclusion flag
  int coverage_count = 0;
  int k_used = 0;
  int ccg_iterations = 0;
  CcgTrace trace;
};

// References a first-stage variable when var >= 0, otherwise a constant.
struct FirstStageHook {
  int var = -1;
  double value = 0.0;
};

// The corrective-dispatch recourse template shared by the range and base-point
// problems: for every scenario v, realized vrg output l+(u-l)v together with
// corrective outputs of the corrective-class units must balance load, respect
// line limits, stay within the corrective band around the base point, and
// honor unit limits. lower/upper are per vrg; base per conventional unit.
std::vector<ScenarioRow> corrective_scenario_rows(const PowerSystem& system,
                                                  const ShiftFactorMatrix& sf,
                                                  const std::vector<FirstStageHook>& lower,
                                                  const std::vector<FirstStageHook>& upper,
                                                  const std::vector<FirstStageHook>& base);

// Indicator (big-M) formulation: minimize exclusions subject to base dispatch
// and per-sample window rows; z_<k> binary. Robust rows are added separately.
MixedIntegerProgram build_dne2(const PowerSystem& system, const ShiftFactorMatrix& sf,
                               const SampleSet& samples, const std::vector<double>& forecast);

SortedIndexSequences sort_sequences(const SampleSet& samples, const std::vector<double>& forecast,
                                    const std::vector<double>& capacities);

// Extended formulation with per-unit sorted-prefix binaries alpha/beta under
// exclusion budget k; z becomes continuous (it equals a max of binaries at any
// optimum). Equivalent to build_dne2 once k reaches the sample count.
MixedIntegerProgram build_dne3(const PowerSystem& system, const ShiftFactorMatrix& sf,
                               const SampleSet& samples, const std::vector<double>& forecast,
                               const KBudget& k_budget);

// Wraps a built first stage with the corrective recourse template, hooking
// l_<id>, u_<id> and pB_<id> variables by name.
TwoStageProblem make_dne_two_stage(const PowerSystem& system, const ShiftFactorMatrix& sf,
                                   MixedIntegerProgram first_stage);

// Clips the samples, then runs the robust loop; with the extended formulation
// the exclusion budget escalates until the solution's own exclusion count
// certifies optimality (count <= k) or the budget is exhausted.
DneDecision solve_dne(const PowerSystem& system, const ShiftFactorMatrix& sf,
                      const SampleSet& samples, const std::vector<double>& forecast,
                      const DneConfig& config = {});

std::string dne_decision_to_json(const DneDecision& decision);

}  // namespace dispatch
