#pragma once

#include <string>
#include <vector>

#include "dispatch/model.hpp"
#include "dispatch/robust.hpp"

namespace dispatch {

// Deterministic economic dispatch on the forecast, with nodal prices from the
// balance dual and the signed line-limit duals.
struct EdDecision {
  std::vector<double> obp;           // per conventional unit, MW
  std::vector<double> vrg_dispatch;  // per vrg unit, MW
  double total_cost = 0.0;           // $/h
  std::vector<double> lmp;           // per bus, $/MWh
};

struct OdneConfig {
  CcgOptions ccg;
};

// Price-weighted window maximization at fixed base points. When no window is
// robust at those base points the decision degrades to zero width at the
// dispatched vrg output, flagged as degenerate.
struct OdneDecision {
  std::vector<double> lower, upper;  // per vrg, MW
  double weighted_width = 0.0;       // price-weighted total width
  bool degenerate = false;
  int ccg_iterations = 0;
  CcgTrace trace;
};

EdDecision solve_ed(const PowerSystem& system, const ShiftFactorMatrix& sf,
                    const std::vector<double>& forecast);

OdneDecision solve_odne(const PowerSystem& system, const ShiftFactorMatrix& sf,
                        const EdDecision& ed, const OdneConfig& config = {});

std::string odne_record_to_json(const EdDecision& ed, const OdneDecision& odne);

}  // namespace dispatch
