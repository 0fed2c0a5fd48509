#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "base_dispatch.hpp"
#include "dispatch/dne.hpp"
#include "dispatch/obp.hpp"
#include "json.hpp"

namespace dispatch {

namespace {

void check_window(const PowerSystem& system, const std::vector<double>& lower,
                  const std::vector<double>& upper) {
  const std::size_t nv = system.vrg_units.size();
  if (lower.size() != nv || upper.size() != nv)
    throw DimensionError("window limits not aligned with vrg units");
  for (std::size_t j = 0; j < nv; ++j) {
    const double cap = system.vrg_units[j].capacity;
    const double tol = 1e-9 * std::max(1.0, cap);
    if (lower[j] < -tol || upper[j] > cap + tol || lower[j] > upper[j] + tol)
      throw InvariantError("window for '" + system.vrg_units[j].id +
                           "' violates 0 <= lower <= upper <= capacity");
  }
}

}  // namespace

double resolve_penalty_price(const PowerSystem& system, double configured) {
  if (configured > 0.0) return configured;
  return 10.0 * system.max_marginal_cost();
}

CorrectiveDispatch corrective_cost(const PowerSystem& system, const ShiftFactorMatrix& sf,
                                   const std::vector<double>& base_obp,
                                   const std::vector<double>& realized_vrg, PenaltyMode mode,
                                   double penalty_price) {
  const std::size_t nu = system.conventional_units.size();
  const std::size_t nv = system.vrg_units.size();
  if (base_obp.size() != nu) throw DimensionError("base points not aligned with units");
  if (realized_vrg.size() != nv)
    throw DimensionError("realized output not aligned with vrg units");
  for (std::size_t i = 0; i < nu; ++i) {
    const auto& unit = system.conventional_units[i];
    const double tol = 1e-7 * std::max(1.0, unit.p_max);
    if (base_obp[i] < unit.p_min - tol || base_obp[i] > unit.p_max + tol)
      throw InvariantError("base point for '" + unit.id + "' outside unit limits");
  }
  for (std::size_t j = 0; j < nv; ++j) {
    const double cap = system.vrg_units[j].capacity;
    const double tol = 1e-7 * std::max(1.0, cap);
    if (realized_vrg[j] < -tol || realized_vrg[j] > cap + tol)
      throw InvariantError("realized output for '" + system.vrg_units[j].id +
                           "' outside [0, capacity]");
  }

  const double price = resolve_penalty_price(system, penalty_price);
  const std::vector<int> ccu = system.ccu_indices();

  LinearProgram lp;
  std::vector<int> pc(ccu.size());
  for (std::size_t t = 0; t < ccu.size(); ++t) {
    const auto& unit = system.conventional_units[ccu[t]];
    const double pb = base_obp[ccu[t]];
    // Band intersected with the unit limits; nonempty because the base point
    // lies in both intervals.
    const double lo = std::max(unit.p_min, pb - unit.corrective_adjust);
    const double hi = std::min(unit.p_max, pb + unit.corrective_adjust);
    pc[t] = lp.add_variable("pC_" + unit.id, lo, hi, 0.0);
    detail::add_cost_epigraph(lp, pc[t], unit, "t_" + unit.id, 1.0);
  }

  double held_cost = 0.0;
  for (std::size_t i = 0; i < nu; ++i)
    if (system.conventional_units[i].control_class == ControlClass::Nccu)
      held_cost += system.conventional_units[i].cost_at(base_obp[i]);
  lp.set_objective_constant(held_cost);

  std::vector<int> slack;
  auto relief = [&](const std::string& name) {
    const int var = lp.add_variable(name, 0.0, kInfinity, price);
    slack.push_back(var);
    return var;
  };

  double balance_rhs = system.total_load();
  for (std::size_t i = 0; i < nu; ++i)
    if (system.conventional_units[i].control_class == ControlClass::Nccu)
      balance_rhs -= base_obp[i];
  for (std::size_t j = 0; j < nv; ++j) balance_rhs -= realized_vrg[j];

  std::vector<LinearTerm> balance;
  for (int var : pc) balance.push_back({var, 1.0});
  if (mode == PenaltyMode::Penalized) {
    balance.push_back({relief("relief_balance_pos"), 1.0});
    balance.push_back({relief("relief_balance_neg"), -1.0});
  }
  lp.add_row("corr_balance", std::move(balance), RowSense::Eq, balance_rhs);

  for (int line = 0; line < sf.line_count(); ++line) {
    // SF-weighted held injections net of load; only corrective outputs vary.
    double fixed = 0.0;
    for (std::size_t n = 0; n < system.buses.size(); ++n)
      fixed -= sf.entries[line][n] * system.loads[n];
    for (std::size_t i = 0; i < nu; ++i)
      if (system.conventional_units[i].control_class == ControlClass::Nccu)
        fixed +=
            sf.entries[line][system.bus_index(system.conventional_units[i].bus)] * base_obp[i];
    for (std::size_t j = 0; j < nv; ++j)
      fixed += sf.entries[line][system.bus_index(system.vrg_units[j].bus)] * realized_vrg[j];

    std::vector<LinearTerm> flow;
    for (std::size_t t = 0; t < ccu.size(); ++t) {
      const double c = sf.entries[line][system.bus_index(system.conventional_units[ccu[t]].bus)];
      if (c != 0.0) flow.push_back({pc[t], c});
    }
    const double cap = system.lines[line].capacity;
    const std::string& id = system.lines[line].id;

    auto hi = flow;
    if (mode == PenaltyMode::Penalized) hi.push_back({relief("relief_flow_hi_" + id), -1.0});
    lp.add_row("corr_flow_hi_" + id, std::move(hi), RowSense::Le, cap - fixed);
    for (auto& term : flow) term.coef = -term.coef;
    if (mode == PenaltyMode::Penalized) flow.push_back({relief("relief_flow_lo_" + id), -1.0});
    lp.add_row("corr_flow_lo_" + id, std::move(flow), RowSense::Le, cap + fixed);
  }

  const Solution sol = solve_lp(lp);
  if (sol.status == SolveStatus::Infeasible)
    throw InfeasibleError("no corrective response accommodates the realized vrg point");
  if (!sol.optimal()) throw SolveError("corrective dispatch solve failed");

  CorrectiveDispatch out;
  for (std::size_t t = 0; t < ccu.size(); ++t) out.outputs.push_back(sol.values[pc[t]]);
  out.cost = sol.objective;
  for (int var : slack) out.slack_used += sol.values[var];
  return out;
}

MixedIntegerProgram build_obp2(const PowerSystem& system, const ShiftFactorMatrix& sf,
                               const SampleSet& samples, const std::vector<double>& forecast,
                               const std::vector<double>& lower, const std::vector<double>& upper,
                               PenaltyMode mode, double penalty_price) {
  check_window(system, lower, upper);
  const auto realized = detail::clipped_realized_matrix(system, samples, forecast);
  const int nsamples = samples.size();
  const double price = resolve_penalty_price(system, penalty_price);
  const std::vector<int> ccu = system.ccu_indices();
  const std::vector<int> nccu = system.nccu_indices();

  MixedIntegerProgram mip;
  LinearProgram& lp = mip.base;
  const detail::BaseVars base = detail::add_base_dispatch_rows(lp, system, sf, forecast);

  // Held units are costed once, at the base point itself; corrective units
  // are costed through their per-sample responses only.
  for (int i : nccu)
    detail::add_cost_epigraph(lp, base.pb[i], system.conventional_units[i],
                              "t_" + system.conventional_units[i].id, 1.0);

  const double wk = 1.0 / nsamples;
  for (int k = 0; k < nsamples; ++k) {
    const std::string suffix = "_" + std::to_string(k);

    std::vector<int> pc(ccu.size());
    for (std::size_t t = 0; t < ccu.size(); ++t) {
      const auto& unit = system.conventional_units[ccu[t]];
      pc[t] = lp.add_variable("pC_" + unit.id + suffix, unit.p_min, unit.p_max, 0.0);
      detail::add_cost_epigraph(lp, pc[t], unit, "tC_" + unit.id + suffix, wk);
    }

    double balance_rhs = system.total_load();
    for (std::size_t j = 0; j < system.vrg_units.size(); ++j) balance_rhs -= realized[j][k];
    std::vector<LinearTerm> balance;
    for (int var : pc) balance.push_back({var, 1.0});
    for (int i : nccu) balance.push_back({base.pb[i], 1.0});
    if (mode == PenaltyMode::Penalized) {
      balance.push_back(
          {lp.add_variable("relief_balance_pos" + suffix, 0.0, kInfinity, price * wk), 1.0});
      balance.push_back(
          {lp.add_variable("relief_balance_neg" + suffix, 0.0, kInfinity, price * wk), -1.0});
    }
    lp.add_row("samp_balance" + suffix, std::move(balance), RowSense::Eq, balance_rhs);

    for (int line = 0; line < sf.line_count(); ++line) {
      double fixed = 0.0;
      for (std::size_t n = 0; n < system.buses.size(); ++n)
        fixed -= sf.entries[line][n] * system.loads[n];
      for (std::size_t j = 0; j < system.vrg_units.size(); ++j)
        fixed += sf.entries[line][system.bus_index(system.vrg_units[j].bus)] * realized[j][k];

      std::vector<LinearTerm> flow;
      for (std::size_t t = 0; t < ccu.size(); ++t) {
        const double c =
            sf.entries[line][system.bus_index(system.conventional_units[ccu[t]].bus)];
        if (c != 0.0) flow.push_back({pc[t], c});
      }
      for (int i : nccu) {
        const double c = sf.entries[line][system.bus_index(system.conventional_units[i].bus)];
        if (c != 0.0) flow.push_back({base.pb[i], c});
      }
      const double cap = system.lines[line].capacity;
      const std::string& id = system.lines[line].id;

      auto hi = flow;
      if (mode == PenaltyMode::Penalized)
        hi.push_back(
            {lp.add_variable("relief_flow_hi_" + id + suffix, 0.0, kInfinity, price * wk), -1.0});
      lp.add_row("samp_flow_hi_" + id + suffix, std::move(hi), RowSense::Le, cap - fixed);
      for (auto& term : flow) term.coef = -term.coef;
      if (mode == PenaltyMode::Penalized)
        flow.push_back(
            {lp.add_variable("relief_flow_lo_" + id + suffix, 0.0, kInfinity, price * wk), -1.0});
      lp.add_row("samp_flow_lo_" + id + suffix, std::move(flow), RowSense::Le, cap + fixed);
    }

    for (std::size_t t = 0; t < ccu.size(); ++t) {
      const auto& unit = system.conventional_units[ccu[t]];
      lp.add_row("samp_band_hi_" + unit.id + suffix, {{pc[t], 1.0}, {base.pb[ccu[t]], -1.0}},
                 RowSense::Le, unit.corrective_adjust);
      lp.add_row("samp_band_lo_" + unit.id + suffix, {{base.pb[ccu[t]], 1.0}, {pc[t], -1.0}},
                 RowSense::Le, unit.corrective_adjust);
    }
  }

  return mip;
}

ObpDecision solve_obp(const PowerSystem& system, const ShiftFactorMatrix& sf,
                      const SampleSet& samples, const std::vector<double>& forecast,
                      const std::vector<double>& lower, const std::vector<double>& upper,
                      const ObpConfig& config) {
  SampleSet clipped = samples;
  if (clipped.origin_forecast.empty()) clipped.origin_forecast = forecast;
  clipped = clip_sample_set(std::move(clipped), vrg_capacities(system));

  const double price = resolve_penalty_price(system, config.penalty_price);
  MixedIntegerProgram first =
      build_obp2(system, sf, clipped, forecast, lower, upper, config.penalty_mode, price);

  const std::vector<int> ccu = system.ccu_indices();
  std::vector<int> pbi, wi;
  for (const auto& unit : system.conventional_units)
    pbi.push_back(first.base.variable("pB_" + unit.id));
  for (const auto& vrg : system.vrg_units) wi.push_back(first.base.variable("w_" + vrg.id));
  std::vector<std::vector<int>> pci(clipped.size(), std::vector<int>(ccu.size()));
  for (int k = 0; k < clipped.size(); ++k)
    for (std::size_t t = 0; t < ccu.size(); ++t)
      pci[k][t] = first.base.variable("pC_" + system.conventional_units[ccu[t]].id + "_" +
                                      std::to_string(k));

  std::vector<FirstStageHook> lo_hooks, up_hooks, base_hooks;
  for (std::size_t j = 0; j < system.vrg_units.size(); ++j) {
    lo_hooks.push_back({-1, lower[j]});
    up_hooks.push_back({-1, upper[j]});
  }
  for (int var : pbi) base_hooks.push_back({var, 0.0});

  TwoStageProblem problem;
  problem.first_stage = std::move(first);
  problem.uncertainty_dim = static_cast<int>(system.vrg_units.size());
  for (int i : ccu) problem.recourse_names.push_back("pC_" + system.conventional_units[i].id);
  problem.rows = corrective_scenario_rows(system, sf, lo_hooks, up_hooks, base_hooks);
  problem.validate();

  CcgResult ccg;
  try {
    ccg = run_ccg(problem, config.ccg);
  } catch (const InfeasibleError&) {
    throw InfeasibleError(
        "no base dispatch is robust over the given window and feasible for every sample; the "
        "window and the system state are inconsistent");
  }

  ObpDecision decision;
  for (int var : pbi) decision.base_obp.push_back(ccg.x[var]);
  for (int var : wi) decision.base_vrg.push_back(ccg.x[var]);
  decision.corrective.resize(clipped.size());
  for (int k = 0; k < clipped.size(); ++k)
    for (std::size_t t = 0; t < ccu.size(); ++t)
      decision.corrective[k].push_back(ccg.x[pci[k][t]]);
  decision.ccg_iterations = ccg.iterations;
  decision.trace = std::move(ccg.trace);

  // The sample blocks decouple at a fixed base point, so re-solving each one
  // must reproduce the optimizer's objective.
  const auto realized = detail::clipped_realized_matrix(system, clipped, forecast);
  double total = 0.0;
  for (int k = 0; k < clipped.size(); ++k) {
    std::vector<double> point(system.vrg_units.size());
    for (std::size_t j = 0; j < system.vrg_units.size(); ++j) point[j] = realized[j][k];
    const CorrectiveDispatch response =
        corrective_cost(system, sf, decision.base_obp, point, config.penalty_mode, price);
    decision.per_sample_costs.push_back(response.cost);
    total += response.cost;
  }
  decision.expected_cost = total / clipped.size();

  if (std::abs(decision.expected_cost - ccg.master_objective) >
      1e-6 * std::max(1.0, std::abs(ccg.master_objective)))
    throw InvariantError("per-sample evaluation disagrees with the optimizer objective");

  return decision;
}

std::string obp_decision_to_json(const ObpDecision& decision) {
  nlohmann::json j;
  j["base_obp"] = decision.base_obp;
  j["base_vrg"] = decision.base_vrg;
  j["expected_cost"] = decision.expected_cost;
  j["per_sample_costs"] = decision.per_sample_costs;
  j["ccg_iterations"] = decision.ccg_iterations;
  return j.dump(2) + "\n";
}

}  // namespace dispatch
