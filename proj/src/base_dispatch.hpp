#pragma once

// Internal builders shared by the range-determination and base-point models:
// the deterministic base-dispatch rows over (pB, w), clip-validated sample
// realizations, and convex piecewise-linear cost epigraphs.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dispatch/model.hpp"
#include "dispatch/sampling.hpp"
#include "dispatch/solver.hpp"

namespace dispatch::detail {

struct BaseVars {
  std::vector<int> pb;  // per conventional unit
  std::vector<int> w;   // per vrg unit
};

// Variables pB_<unit> and w_<vrg> with the deterministic rows: balance,
// ramp window around the current output, and base-case line limits.
inline BaseVars add_base_dispatch_rows(LinearProgram& lp, const PowerSystem& system,
                                       const ShiftFactorMatrix& sf,
                                       const std::vector<double>& forecast) {
  BaseVars vars;
  for (const auto& unit : system.conventional_units)
    vars.pb.push_back(lp.add_variable("pB_" + unit.id, unit.p_min, unit.p_max, 0.0));
  for (std::size_t j = 0; j < system.vrg_units.size(); ++j)
    vars.w.push_back(lp.add_variable("w_" + system.vrg_units[j].id, 0.0, forecast[j], 0.0));

  std::vector<LinearTerm> balance;
  for (int var : vars.pb) balance.push_back({var, 1.0});
  for (int var : vars.w) balance.push_back({var, 1.0});
  lp.add_row("base_balance", balance, RowSense::Eq, system.total_load());

  for (std::size_t i = 0; i < system.conventional_units.size(); ++i) {
    const auto& unit = system.conventional_units[i];
    lp.add_row("ramp_up_" + unit.id, {{vars.pb[i], 1.0}}, RowSense::Le,
               unit.p_current + unit.ramp);
    lp.add_row("ramp_dn_" + unit.id, {{vars.pb[i], -1.0}}, RowSense::Le,
               unit.ramp - unit.p_current);
  }

  for (int line = 0; line < sf.line_count(); ++line) {
    std::vector<LinearTerm> flow;
    double load_part = 0.0;
    for (std::size_t i = 0; i < system.conventional_units.size(); ++i) {
      const double c = sf.entries[line][system.bus_index(system.conventional_units[i].bus)];
      if (c != 0.0) flow.push_back({vars.pb[i], c});
    }
    for (std::size_t j = 0; j < system.vrg_units.size(); ++j) {
      const double c = sf.entries[line][system.bus_index(system.vrg_units[j].bus)];
      if (c != 0.0) flow.push_back({vars.w[j], c});
    }
    for (std::size_t n = 0; n < system.buses.size(); ++n)
      load_part += sf.entries[line][n] * system.loads[n];

    const double cap = system.lines[line].capacity;
    const std::string& id = system.lines[line].id;
    lp.add_row("base_flow_hi_" + id, flow, RowSense::Le, cap + load_part);
    for (auto& t : flow) t.coef = -t.coef;
    lp.add_row("base_flow_lo_" + id, flow, RowSense::Le, cap - load_part);
  }
  return vars;
}

// realized[j][k]: clipped sample realization of vrg unit j under sample k.
// Rejects samples whose raw realization leaves [0, capacity]: downstream
// constants (indicator big-M offsets, per-sample block injections) assume
// clipped data.
inline std::vector<std::vector<double>> clipped_realized_matrix(
    const PowerSystem& system, const SampleSet& samples, const std::vector<double>& forecast) {
  const std::size_t nv = system.vrg_units.size();
  if (nv == 0) throw InvariantError("at least one vrg unit is required");
  if (samples.size() < 1) throw InvariantError("at least one sample is required");
  if (forecast.size() != nv) throw DimensionError("forecast not aligned with vrg units");
  if (!samples.origin_forecast.empty()) {
    if (samples.origin_forecast.size() != nv)
      throw DimensionError("sample origin forecast not aligned with vrg units");
    for (std::size_t j = 0; j < nv; ++j)
      if (std::abs(samples.origin_forecast[j] - forecast[j]) > 1e-9)
        throw InvariantError("samples were selected for a different forecast");
  }

  std::vector<std::vector<double>> realized(nv, std::vector<double>(samples.size()));
  for (std::size_t j = 0; j < nv; ++j) {
    const double cap = system.vrg_units[j].capacity;
    const double tol = 1e-9 * std::max(1.0, cap);
    if (forecast[j] < -tol || forecast[j] > cap + tol)
      throw InvariantError("forecast for '" + system.vrg_units[j].id + "' outside [0, capacity]");
    for (int k = 0; k < samples.size(); ++k) {
      if (samples.errors[k].size() != nv)
        throw DimensionError("sample error vector not aligned with vrg units");
      const double r = forecast[j] + samples.errors[k][j];
      if (r < -tol || r > cap + tol)
        throw InvariantError("unclipped sample " + std::to_string(k) + " for '" +
                             system.vrg_units[j].id + "': realization outside [0, capacity]");
      realized[j][k] = std::min(std::max(r, 0.0), cap);
    }
  }
  return realized;
}

// Epigraph variable t >= C(p) for a convex piecewise-linear unit cost,
// one cut per segment: t >= C(a_s) + mc_s (p - a_s). Exact at any optimum
// that minimizes t (convexity makes the max cut equal the curve).
inline int add_cost_epigraph(LinearProgram& lp, int p_var, const ConventionalUnit& unit,
                             const std::string& t_name, double objective_coef) {
  const int t = lp.add_variable(t_name, -kInfinity, kInfinity, objective_coef);
  double seg_start = unit.p_min;
  for (std::size_t s = 0; s < unit.cost.segments.size(); ++s) {
    const double mc = unit.cost.segments[s].marginal_cost;
    const double value_at_start = unit.cost_at(seg_start);
    lp.add_row(t_name + "_cut" + std::to_string(s), {{p_var, mc}, {t, -1.0}}, RowSense::Le,
               mc * seg_start - value_at_start);
    seg_start = unit.cost.segments[s].breakpoint;
  }
  return t;
}

}  // namespace dispatch::detail
