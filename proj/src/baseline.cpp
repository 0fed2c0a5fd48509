#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "base_dispatch.hpp"
#include "dispatch/baseline.hpp"
#include "dispatch/dne.hpp"
#include "json.hpp"

namespace dispatch {

namespace {

// Prices below this floor (degenerate or negative nodal prices in toy cases)
// would stop rewarding width at the affected unit entirely.
constexpr double kWeightFloor = 1e-3;

int row_index(const LinearProgram& lp, const std::string& name) {
  for (int i = 0; i < lp.num_rows(); ++i)
    if (lp.rows()[i].name == name) return i;
  throw InvariantError("row '" + name + "' not found");
}

std::vector<double> window_weights(const PowerSystem& system, const EdDecision& ed) {
  std::vector<double> weights;
  for (const auto& vrg : system.vrg_units)
    weights.push_back(std::max(ed.lmp[system.bus_index(vrg.bus)], kWeightFloor));
  return weights;
}

}  // namespace

EdDecision solve_ed(const PowerSystem& system, const ShiftFactorMatrix& sf,
                    const std::vector<double>& forecast) {
  if (forecast.size() != system.vrg_units.size())
    throw DimensionError("forecast not aligned with vrg units");
  for (std::size_t j = 0; j < system.vrg_units.size(); ++j) {
    const double cap = system.vrg_units[j].capacity;
    if (forecast[j] < -1e-9 * std::max(1.0, cap) || forecast[j] > cap * (1.0 + 1e-9))
      throw InvariantError("forecast for '" + system.vrg_units[j].id +
                           "' outside [0, capacity]");
  }

  LinearProgram lp;
  const detail::BaseVars base = detail::add_base_dispatch_rows(lp, system, sf, forecast);
  for (std::size_t i = 0; i < system.conventional_units.size(); ++i)
    detail::add_cost_epigraph(lp, base.pb[i], system.conventional_units[i],
                              "t_" + system.conventional_units[i].id, 1.0);

  const Solution sol = solve_lp(lp);
  if (sol.status == SolveStatus::Infeasible)
    throw InfeasibleError("load exceeds the dispatchable capability at this forecast");
  if (!sol.optimal()) throw SolveError("economic dispatch solve failed");

  EdDecision ed;
  for (int var : base.pb) ed.obp.push_back(sol.values[var]);
  for (int var : base.w) ed.vrg_dispatch.push_back(sol.values[var]);
  ed.total_cost = sol.objective;

  // Nodal price: balance dual plus the signed line-dual combination through
  // the shift factors (duals are d(cost)/d(rhs), so the sign of each limit
  // row's load term carries through unchanged).
  const double lambda = sol.duals[row_index(lp, "base_balance")];
  std::vector<double> mu(sf.line_count(), 0.0);
  for (int line = 0; line < sf.line_count(); ++line) {
    const std::string& id = system.lines[line].id;
    mu[line] = sol.duals[row_index(lp, "base_flow_hi_" + id)] -
               sol.duals[row_index(lp, "base_flow_lo_" + id)];
  }
  for (std::size_t n = 0; n < system.buses.size(); ++n) {
    double price = lambda;
    for (int line = 0; line < sf.line_count(); ++line)
      price += mu[line] * sf.entries[line][n];
    ed.lmp.push_back(price);
  }
  return ed;
}

OdneDecision solve_odne(const PowerSystem& system, const ShiftFactorMatrix& sf,
                        const EdDecision& ed, const OdneConfig& config) {
  const std::size_t nv = system.vrg_units.size();
  if (ed.obp.size() != system.conventional_units.size())
    throw DimensionError("base points not aligned with units");
  if (ed.vrg_dispatch.size() != nv) throw DimensionError("vrg dispatch not aligned with units");
  if (ed.lmp.size() != system.buses.size()) throw DimensionError("prices not aligned with buses");

  const std::vector<double> weights = window_weights(system, ed);

  MixedIntegerProgram first;
  std::vector<int> li(nv), ui(nv);
  for (std::size_t j = 0; j < nv; ++j) {
    const auto& vrg = system.vrg_units[j];
    li[j] = first.base.add_variable("l_" + vrg.id, 0.0, vrg.capacity, weights[j]);
    ui[j] = first.base.add_variable("u_" + vrg.id, 0.0, vrg.capacity, -weights[j]);
    first.base.add_row("window_order_" + vrg.id, {{li[j], 1.0}, {ui[j], -1.0}}, RowSense::Le,
                       0.0);
  }

  std::vector<FirstStageHook> lower, upper, base;
  for (std::size_t j = 0; j < nv; ++j) {
    lower.push_back({li[j], 0.0});
    upper.push_back({ui[j], 0.0});
  }
  for (double pb : ed.obp) base.push_back({-1, pb});

  TwoStageProblem problem;
  problem.first_stage = std::move(first);
  problem.uncertainty_dim = static_cast<int>(nv);
  for (int i : system.ccu_indices())
    problem.recourse_names.push_back("pC_" + system.conventional_units[i].id);
  problem.rows = corrective_scenario_rows(system, sf, lower, upper, base);
  problem.validate();

  OdneDecision decision;
  try {
    CcgResult ccg = run_ccg(problem, config.ccg);
    for (std::size_t j = 0; j < nv; ++j) {
      decision.lower.push_back(ccg.x[li[j]]);
      decision.upper.push_back(ccg.x[ui[j]]);
      decision.weighted_width += weights[j] * (decision.upper[j] - decision.lower[j]);
    }
    decision.ccg_iterations = ccg.iterations;
    decision.trace = std::move(ccg.trace);
  } catch (const InfeasibleError&) {
    // No window at all is robust at the fixed base points; report the
    // dispatched output as a zero-width window and flag it.
    decision.lower = ed.vrg_dispatch;
    decision.upper = ed.vrg_dispatch;
    decision.weighted_width = 0.0;
    decision.degenerate = true;
  }
  return decision;
}

std::string odne_record_to_json(const EdDecision& ed, const OdneDecision& odne) {
  nlohmann::json j;
  j["obp"] = ed.obp;
  j["lmp"] = ed.lmp;
  j["lower"] = odne.lower;
  j["upper"] = odne.upper;
  j["weighted_width"] = odne.weighted_width;
  return j.dump(2) + "\n";
}

}  // namespace dispatch
