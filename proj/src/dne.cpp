#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "base_dispatch.hpp"
#include "dispatch/dne.hpp"
#include "json.hpp"

namespace dispatch {

namespace {

using detail::clipped_realized_matrix;

// Exclusion count is the primary objective; a tiny reward on total width makes
// the optimum deterministic among equal-coverage windows without ever trading
// a covered sample for width.
double width_weight(const PowerSystem& system) {
  double total_cap = 0.0;
  for (const auto& v : system.vrg_units) total_cap += v.capacity;
  return 1e-6 / std::max(1.0, total_cap);
}

// Base dispatch backbone plus the window variables l_<vrg>, u_<vrg> and their
// ordering rows.
void add_first_stage_base(LinearProgram& lp, const PowerSystem& system,
                          const ShiftFactorMatrix& sf, const std::vector<double>& forecast) {
  detail::add_base_dispatch_rows(lp, system, sf, forecast);

  const double tw = width_weight(system);
  for (const auto& vrg : system.vrg_units) {
    const int l = lp.add_variable("l_" + vrg.id, 0.0, vrg.capacity, tw);
    const int u = lp.add_variable("u_" + vrg.id, 0.0, vrg.capacity, -tw);
    lp.add_row("window_order_" + vrg.id, {{l, 1.0}, {u, -1.0}}, RowSense::Le, 0.0);
  }
}

}  // namespace

MixedIntegerProgram build_dne2(const PowerSystem& system, const ShiftFactorMatrix& sf,
                               const SampleSet& samples, const std::vector<double>& forecast) {
  const auto realized = clipped_realized_matrix(system, samples, forecast);

  MixedIntegerProgram mip;
  LinearProgram& lp = mip.base;
  add_first_stage_base(lp, system, sf, forecast);

  std::vector<int> z(samples.size());
  for (int k = 0; k < samples.size(); ++k) {
    z[k] = lp.add_variable("z_" + std::to_string(k), 0.0, 1.0, 1.0);
    mip.mark_binary(z[k]);
  }

  for (std::size_t j = 0; j < system.vrg_units.size(); ++j) {
    const auto& vrg = system.vrg_units[j];
    const int lvar = lp.variable("l_" + vrg.id);
    const int uvar = lp.variable("u_" + vrg.id);
    for (int k = 0; k < samples.size(); ++k) {
      const double r = realized[j][k];
      // z=0 pins the window around the sample; z=1 relaxes to [0, cap].
      lp.add_row("cover_lo_" + vrg.id + "_" + std::to_string(k),
                 {{z[k], vrg.capacity - r}, {lvar, -1.0}}, RowSense::Ge, -r);
      lp.add_row("cover_hi_" + vrg.id + "_" + std::to_string(k), {{z[k], r}, {uvar, 1.0}},
                 RowSense::Ge, r);
    }
  }
  return mip;
}

SortedIndexSequences sort_sequences(const SampleSet& samples, const std::vector<double>& forecast,
                                    const std::vector<double>& capacities) {
  if (samples.size() < 1) throw InvariantError("sort_sequences needs a nonempty sample set");
  const std::size_t nv = forecast.size();
  if (capacities.size() != nv) throw DimensionError("capacities not aligned with forecast");

  SortedIndexSequences seq;
  seq.phi.resize(nv);
  seq.gamma.resize(nv);
  for (std::size_t j = 0; j < nv; ++j) {
    std::vector<double> r(samples.size());
    for (int k = 0; k < samples.size(); ++k) {
      if (samples.errors[k].size() != nv)
        throw DimensionError("sample error vector not aligned with forecast");
      r[k] = forecast[j] + samples.errors[k][j];
    }
    std::vector<int> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);

    seq.phi[j] = idx;
    std::sort(seq.phi[j].begin(), seq.phi[j].end(), [&](int a, int b) {
      if (r[a] != r[b]) return r[a] < r[b];
      return a < b;
    });
    seq.gamma[j] = idx;
    std::sort(seq.gamma[j].begin(), seq.gamma[j].end(), [&](int a, int b) {
      if (r[a] != r[b]) return r[a] > r[b];
      return a < b;
    });
  }
  return seq;
}

MixedIntegerProgram build_dne3(const PowerSystem& system, const ShiftFactorMatrix& sf,
                               const SampleSet& samples, const std::vector<double>& forecast,
                               const KBudget& k_budget) {
  const auto realized = clipped_realized_matrix(system, samples, forecast);
  const int N = samples.size();
  const int K = k_budget.k;
  if (K < 0 || K > N) throw InvariantError("exclusion budget outside [0, sample count]");
  if (k_budget.k_max != N)
    throw InvariantError("exclusion budget k_max must equal the sample count");

  MixedIntegerProgram mip;
  LinearProgram& lp = mip.base;
  add_first_stage_base(lp, system, sf, forecast);

  // z stays continuous here: every z_k is bounded below by the alpha/beta
  // binaries that reference it, and a minimized objective drives it onto
  // their maximum, which is binary.
  std::vector<int> z(N);
  for (int k = 0; k < N; ++k) z[k] = lp.add_variable("z_" + std::to_string(k), 0.0, 1.0, 1.0);

  const auto caps = vrg_capacities(system);
  const SortedIndexSequences seq = sort_sequences(samples, forecast, caps);

  for (std::size_t j = 0; j < system.vrg_units.size(); ++j) {
    const auto& vrg = system.vrg_units[j];
    const int lvar = lp.variable("l_" + vrg.id);
    const int uvar = lp.variable("u_" + vrg.id);
    const std::vector<int>& phi = seq.phi[j];
    const std::vector<int>& gamma = seq.gamma[j];
    auto rphi = [&](int m) { return realized[j][phi[m]]; };    // ascending
    auto rgamma = [&](int m) { return realized[j][gamma[m]]; };  // descending

    std::vector<int> alpha(K), beta(K);
    for (int m = 0; m < K; ++m) {
      alpha[m] = lp.add_variable("alpha_" + vrg.id + "_" + std::to_string(m + 1), 0.0, 1.0, 0.0);
      beta[m] = lp.add_variable("beta_" + vrg.id + "_" + std::to_string(m + 1), 0.0, 1.0, 0.0);
      mip.mark_binary(alpha[m]);
      mip.mark_binary(beta[m]);
    }

    // Lower side: l <= r_phi(1) + sum_m (r_phi(m+1) - r_phi(m)) alpha_m.
    // Excluding the m lowest samples lets l climb to the next realized value;
    // at full budget the last step opens up to the capacity.
    std::vector<LinearTerm> lo{{lvar, 1.0}};
    for (int m = 0; m < K; ++m) {
      const double next = m + 1 < N ? rphi(m + 1) : vrg.capacity;
      const double step = next - rphi(m);
      if (step != 0.0) lo.push_back({alpha[m], -step});
    }
    lp.add_row("prefix_lo_" + vrg.id, lo, RowSense::Le, rphi(0));

    // Upper side mirrors it: u >= r_gamma(1) - sum_m (r_gamma(m) - r_gamma(m+1)) beta_m,
    // the last step opening down to zero.
    std::vector<LinearTerm> hi{{uvar, 1.0}};
    for (int m = 0; m < K; ++m) {
      const double next = m + 1 < N ? rgamma(m + 1) : 0.0;
      const double step = rgamma(m) - next;
      if (step != 0.0) hi.push_back({beta[m], step});
    }
    lp.add_row("prefix_hi_" + vrg.id, hi, RowSense::Ge, rgamma(0));

    for (int m = 1; m < K; ++m) {
      lp.add_row("chain_lo_" + vrg.id + "_" + std::to_string(m + 1),
                 {{alpha[m], 1.0}, {alpha[m - 1], -1.0}}, RowSense::Le, 0.0);
      lp.add_row("chain_hi_" + vrg.id + "_" + std::to_string(m + 1),
                 {{beta[m], 1.0}, {beta[m - 1], -1.0}}, RowSense::Le, 0.0);
    }
    for (int m = 0; m < K; ++m) {
      lp.add_row("link_lo_" + vrg.id + "_" + std::to_string(m + 1),
                 {{alpha[m], 1.0}, {z[phi[m]], -1.0}}, RowSense::Le, 0.0);
      lp.add_row("link_hi_" + vrg.id + "_" + std::to_string(m + 1),
                 {{beta[m], 1.0}, {z[gamma[m]], -1.0}}, RowSense::Le, 0.0);
    }
  }
  return mip;
}

std::vector<ScenarioRow> corrective_scenario_rows(const PowerSystem& system,
                                                  const ShiftFactorMatrix& sf,
                                                  const std::vector<FirstStageHook>& lower,
                                                  const std::vector<FirstStageHook>& upper,
                                                  const std::vector<FirstStageHook>& base) {
  const std::size_t nv = system.vrg_units.size();
  const std::size_t nu = system.conventional_units.size();
  if (lower.size() != nv || upper.size() != nv)
    throw DimensionError("window hooks not aligned with vrg units");
  if (base.size() != nu) throw DimensionError("base-point hooks not aligned with units");

  const std::vector<int> ccu = system.ccu_indices();
  std::vector<int> recourse_of(nu, -1);
  for (std::size_t t = 0; t < ccu.size(); ++t) recourse_of[ccu[t]] = static_cast<int>(t);

  // Realized vrg output under scenario v is l + (u - l) v; expand the hooks
  // into the x / x*v / v / constant buckets of the row.
  auto add_window = [&](ScenarioRow& row, std::size_t j, double mult) {
    const FirstStageHook& lo = lower[j];
    const FirstStageHook& up = upper[j];
    if (lo.var >= 0) {
      row.x_terms.push_back({lo.var, mult});
      row.xv_terms.emplace_back(lo.var, static_cast<int>(j), -mult);
    } else {
      row.rhs -= mult * lo.value;
      row.v_terms.push_back({static_cast<int>(j), -mult * lo.value});
    }
    if (up.var >= 0) {
      row.xv_terms.emplace_back(up.var, static_cast<int>(j), mult);
    } else {
      row.v_terms.push_back({static_cast<int>(j), mult * up.value});
    }
  };
  auto add_base = [&](ScenarioRow& row, std::size_t i, double mult) {
    if (base[i].var >= 0)
      row.x_terms.push_back({base[i].var, mult});
    else
      row.rhs -= mult * base[i].value;
  };

  std::vector<ScenarioRow> rows;

  for (int sign : {+1, -1}) {
    ScenarioRow row;
    row.name = sign > 0 ? "corr_balance_hi" : "corr_balance_lo";
    row.rhs = sign * system.total_load();
    for (std::size_t i = 0; i < nu; ++i) {
      if (recourse_of[i] >= 0)
        row.y_terms.push_back({recourse_of[i], static_cast<double>(sign)});
      else
        add_base(row, i, sign);
    }
    for (std::size_t j = 0; j < nv; ++j) add_window(row, j, sign);
    rows.push_back(std::move(row));
  }

  for (int line = 0; line < sf.line_count(); ++line) {
    double load_part = 0.0;
    for (std::size_t n = 0; n < system.buses.size(); ++n)
      load_part += sf.entries[line][n] * system.loads[n];
    for (int sign : {+1, -1}) {
      ScenarioRow row;
      row.name = std::string(sign > 0 ? "corr_flow_hi_" : "corr_flow_lo_") +
                 system.lines[line].id;
      row.rhs = system.lines[line].capacity + sign * load_part;
      for (std::size_t i = 0; i < nu; ++i) {
        const double c =
            sign * sf.entries[line][system.bus_index(system.conventional_units[i].bus)];
        if (c == 0.0) continue;
        if (recourse_of[i] >= 0)
          row.y_terms.push_back({recourse_of[i], c});
        else
          add_base(row, i, c);
      }
      for (std::size_t j = 0; j < nv; ++j) {
        const double c = sign * sf.entries[line][system.bus_index(system.vrg_units[j].bus)];
        if (c != 0.0) add_window(row, j, c);
      }
      rows.push_back(std::move(row));
    }
  }

  for (std::size_t t = 0; t < ccu.size(); ++t) {
    const auto& unit = system.conventional_units[ccu[t]];
    ScenarioRow band_hi;
    band_hi.name = "corr_band_hi_" + unit.id;
    band_hi.rhs = unit.corrective_adjust;
    band_hi.y_terms.push_back({static_cast<int>(t), 1.0});
    add_base(band_hi, ccu[t], -1.0);
    rows.push_back(std::move(band_hi));

    ScenarioRow band_lo;
    band_lo.name = "corr_band_lo_" + unit.id;
    band_lo.rhs = unit.corrective_adjust;
    band_lo.y_terms.push_back({static_cast<int>(t), -1.0});
    add_base(band_lo, ccu[t], 1.0);
    rows.push_back(std::move(band_lo));

    ScenarioRow cap_hi;
    cap_hi.name = "corr_cap_hi_" + unit.id;
    cap_hi.rhs = unit.p_max;
    cap_hi.y_terms.push_back({static_cast<int>(t), 1.0});
    rows.push_back(std::move(cap_hi));

    ScenarioRow cap_lo;
    cap_lo.name = "corr_cap_lo_" + unit.id;
    cap_lo.rhs = -unit.p_min;
    cap_lo.y_terms.push_back({static_cast<int>(t), -1.0});
    rows.push_back(std::move(cap_lo));
  }

  return rows;
}

TwoStageProblem make_dne_two_stage(const PowerSystem& system, const ShiftFactorMatrix& sf,
                                   MixedIntegerProgram first_stage) {
  std::vector<FirstStageHook> lower, upper, base;
  for (const auto& vrg : system.vrg_units) {
    lower.push_back({first_stage.base.variable("l_" + vrg.id), 0.0});
    upper.push_back({first_stage.base.variable("u_" + vrg.id), 0.0});
  }
  for (const auto& unit : system.conventional_units)
    base.push_back({first_stage.base.variable("pB_" + unit.id), 0.0});

  TwoStageProblem problem;
  problem.first_stage = std::move(first_stage);
  problem.uncertainty_dim = static_cast<int>(system.vrg_units.size());
  for (int i : system.ccu_indices())
    problem.recourse_names.push_back("pC_" + system.conventional_units[i].id);
  problem.rows = corrective_scenario_rows(system, sf, lower, upper, base);
  problem.validate();
  return problem;
}

DneDecision solve_dne(const PowerSystem& system, const ShiftFactorMatrix& sf,
                      const SampleSet& samples, const std::vector<double>& forecast,
                      const DneConfig& config) {
  SampleSet clipped = samples;
  if (clipped.origin_forecast.empty()) clipped.origin_forecast = forecast;
  clipped = clip_sample_set(std::move(clipped), vrg_capacities(system));
  const int N = clipped.size();

  auto run_at = [&](int k) {
    MixedIntegerProgram first =
        config.formulation == DneFormulation::BigM
            ? build_dne2(system, sf, clipped, forecast)
            : build_dne3(system, sf, clipped, forecast, KBudget{k, N});

    std::vector<int> li, ui, wi, pbi, zi;
    for (const auto& vrg : system.vrg_units) {
      li.push_back(first.base.variable("l_" + vrg.id));
      ui.push_back(first.base.variable("u_" + vrg.id));
      wi.push_back(first.base.variable("w_" + vrg.id));
    }
    for (const auto& unit : system.conventional_units)
      pbi.push_back(first.base.variable("pB_" + unit.id));
    for (int s = 0; s < N; ++s) zi.push_back(first.base.variable("z_" + std::to_string(s)));

    TwoStageProblem problem = make_dne_two_stage(system, sf, std::move(first));
    const CcgResult ccg = run_ccg(problem, config.ccg);

    DneDecision d;
    for (std::size_t j = 0; j < li.size(); ++j) {
      d.lower.push_back(ccg.x[li[j]]);
      d.upper.push_back(ccg.x[ui[j]]);
      d.base_vrg.push_back(ccg.x[wi[j]]);
    }
    for (int var : pbi) d.base_obp.push_back(ccg.x[var]);
    int excluded = 0;
    for (int var : zi) {
      const int flag = ccg.x[var] > 0.5 ? 1 : 0;
      d.indicators.push_back(flag);
      excluded += flag;
    }
    d.coverage_count = N - excluded;
    d.k_used = k;
    d.ccg_iterations = ccg.iterations;
    d.trace = ccg.trace;
    return d;
  };

  if (config.formulation == DneFormulation::BigM) return run_at(N);

  int k = config.initial_k >= 0 ? std::min(config.initial_k, N)
                                : static_cast<int>(std::ceil(0.2 * N));
  for (;;) {
    try {
      DneDecision d = run_at(k);
      const int excluded = N - d.coverage_count;
      // excluded <= k certifies optimality: a globally optimal solution
      // excludes at most its own count per unit and side, so it stays
      // feasible under this budget and could not do better at a larger one.
      if (excluded <= k || k >= N) return d;
      k = std::min(N, std::max({2 * k, 1, excluded}));
    } catch (const InfeasibleError&) {
      if (k >= N)
        throw InfeasibleError(
            "range determination infeasible at the full exclusion budget: "
            "the base dispatch admits no robust-feasible point");
      k = std::min(N, std::max(2 * k, 1));
    }
  }
}

std::string dne_decision_to_json(const DneDecision& decision) {
  nlohmann::json j;
  j["lower"] = decision.lower;
  j["upper"] = decision.upper;
  j["base_vrg"] = decision.base_vrg;
  j["base_obp"] = decision.base_obp;
  j["coverage_count"] = decision.coverage_count;
  j["k_used"] = decision.k_used;
  j["ccg_iterations"] = decision.ccg_iterations;
  return j.dump(2) + "\n";
}

}  // namespace dispatch
