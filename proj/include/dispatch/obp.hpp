#pragma once

#include <string>
#include <vector>

#include "dispatch/model.hpp"
#include "dispatch/robust.hpp"
#include "dispatch/sampling.hpp"

namespace dispatch {

// Real-time shortfall handling in the corrective stage: Strict reports an
// infeasible realized point as an error, Penalized absorbs imbalance and line
// overloads in slack variables priced high enough to dominate any economic
// trade-off, and reports the slack magnitude.
enum class PenaltyMode { Strict, Penalized };

// A configured price > 0 wins; otherwise 10x the largest marginal cost in the
// case, so slack is used only when physically unavoidable.
double resolve_penalty_price(const PowerSystem& system, double configured);

struct ObpConfig {
  PenaltyMode penalty_mode = PenaltyMode::Strict;
  double penalty_price = -1.0;  // <= 0: resolved via resolve_penalty_price
  CcgOptions ccg;
};

// Second-stage redispatch against one realized vrg point: corrective units
// move within their band around the base point, every other unit is held.
struct CorrectiveDispatch {
  std::vector<double> outputs;  // per corrective unit, MW
  double cost = 0.0;            // $/h, corrective cost plus held units' base cost
  double slack_used = 0.0;      // total relief slack, MW; always 0 under Strict
};

struct ObpDecision {
  std::vector<double> base_obp;                 // per conventional unit, MW
  std::vector<double> base_vrg;                 // scheduled vrg output, MW
  std::vector<std::vector<double>> corrective;  // [sample][corrective unit], MW
  std::vector<double> per_sample_costs;         // $/h
  double expected_cost = 0.0;                   // mean of per_sample_costs
  int ccg_iterations = 0;
  CcgTrace trace;
};

// Cost of the optimal corrective response to realized_vrg from base point
// base_obp. Strict mode throws InfeasibleError when no response exists.
CorrectiveDispatch corrective_cost(const PowerSystem& system, const ShiftFactorMatrix& sf,
                                   const std::vector<double>& base_obp,
                                   const std::vector<double>& realized_vrg,
                                   PenaltyMode mode = PenaltyMode::Strict,
                                   double penalty_price = -1.0);

// Sample-average base-point master: base dispatch rows with the window fixed
// at [lower, upper], one corrective block per sample, objective = held units'
// base cost plus the mean corrective cost. Robust rows are added separately.
MixedIntegerProgram build_obp2(const PowerSystem& system, const ShiftFactorMatrix& sf,
                               const SampleSet& samples, const std::vector<double>& forecast,
                               const std::vector<double>& lower,
                               const std::vector<double>& upper,
                               PenaltyMode mode = PenaltyMode::Strict,
                               double penalty_price = -1.0);

// Clips the samples, then minimizes the sample-average cost subject to the
// robust rows at the fixed window via the scenario loop. The reported
// expected cost is recomputed per sample at the returned base point and must
// agree with the optimizer's objective.
ObpDecision solve_obp(const PowerSystem& system, const ShiftFactorMatrix& sf,
                      const SampleSet& samples, const std::vector<double>& forecast,
                      const std::vector<double>& lower, const std::vector<double>& upper,
                      const ObpConfig& config = {});

std::string obp_decision_to_json(const ObpDecision& decision);

}  // namespace dispatch
