#include "dispatch/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dispatch/errors.hpp"
#include "json.hpp"

namespace dispatch {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

const char* method_name(SimMethod m) { return m == SimMethod::Proposed ? "proposed" : "odne"; }

// Notes travel in a CSV field, so they must stay comma-free.
std::string sanitize_note(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

void check_config(const PowerSystem& system, const std::vector<HistoryRecord>& history,
                  const std::vector<HistoryRecord>& validation, const SimulationConfig& config) {
  if (config.horizon.empty()) throw InvariantError("simulation horizon is empty");
  if (config.n_dne < 1 || config.n_obp < 1)
    throw InvariantError("sample counts must be at least 1");
  if (!(config.epsilon > 0.0)) throw InvariantError("convergence tolerance must be positive");
  const int nv = static_cast<int>(system.vrg_units.size());
  const std::vector<double> caps = vrg_capacities(system);
  for (int p : config.horizon) {
    if (p < 0 || p >= static_cast<int>(validation.size()))
      throw InvariantError("horizon index " + std::to_string(p) +
                           " is outside the validation series");
    const HistoryRecord& rec = validation[p];
    if (static_cast<int>(rec.forecast.size()) != nv)
      throw DimensionError("validation forecast width mismatch at period " + std::to_string(p));
    if (static_cast<int>(rec.observed.size()) != nv)
      throw InvariantError("validation record at period " + std::to_string(p) +
                           " lacks observed output");
    for (int j = 0; j < nv; ++j) {
      const double tol = 1e-9 * std::max(1.0, caps[j]);
      if (rec.observed[j] < -tol || rec.observed[j] > caps[j] + tol)
        throw InvariantError("observed output outside [0, capacity] at period " +
                             std::to_string(p));
      if (rec.forecast[j] < -tol || rec.forecast[j] > caps[j] + tol)
        throw InvariantError("forecast outside [0, capacity] at period " + std::to_string(p));
    }
  }
  // The sample pool must be history relative to everything we simulate.
  std::string min_period_ts;
  for (int p : config.horizon) {
    const std::string& ts = validation[p].timestamp;
    if (min_period_ts.empty() || ts < min_period_ts) min_period_ts = ts;
  }
  for (const HistoryRecord& h : history) {
    if (!(h.timestamp < min_period_ts))
      throw InvariantError("history record '" + h.timestamp +
                           "' does not precede the simulated horizon");
  }
}

}  // namespace

PeriodResult realize_dispatch(const PowerSystem& system, const ShiftFactorMatrix& sf,
                              const DispatchDecision& decision,
                              const std::vector<double>& observed, PenaltyMode mode) {
  const int nv = static_cast<int>(system.vrg_units.size());
  const int nu = static_cast<int>(system.conventional_units.size());
  if (static_cast<int>(observed.size()) != nv)
    throw DimensionError("observed vector width does not match the vrg fleet");
  if (static_cast<int>(decision.lower.size()) != nv ||
      static_cast<int>(decision.upper.size()) != nv)
    throw DimensionError("window width does not match the vrg fleet");
  if (static_cast<int>(decision.base_obp.size()) != nu)
    throw DimensionError("base-point vector width does not match the conventional fleet");
  const std::vector<double> caps = vrg_capacities(system);
  for (int j = 0; j < nv; ++j) {
    if (decision.lower[j] > decision.upper[j] + 1e-9)
      throw InvariantError("window is inverted for '" + system.vrg_units[j].id + "'");
    if (observed[j] < -1e-9)
      throw InvariantError("negative observed output for '" + system.vrg_units[j].id + "'");
  }

  PeriodResult pr;
  pr.lower = decision.lower;
  pr.upper = decision.upper;
  pr.observed = observed;
  pr.realized.resize(nv);
  pr.dne_width.resize(nv);
  pr.covered = true;
  for (int j = 0; j < nv; ++j) {
    // Output above the admitted ceiling is curtailed; a shortfall below the
    // floor cannot be curtailed away and lands on the corrective units.
    const double ceiling = std::min(decision.upper[j], caps[j]);
    pr.realized[j] = std::max(0.0, std::min(observed[j], ceiling));
    pr.dne_width[j] = decision.upper[j] - decision.lower[j];
    if (observed[j] < decision.lower[j] - 1e-9 || observed[j] > decision.upper[j] + 1e-9)
      pr.covered = false;
  }
  pr.wind_output_mw = std::accumulate(pr.realized.begin(), pr.realized.end(), 0.0);

  try {
    CorrectiveDispatch cd = corrective_cost(system, sf, decision.base_obp, pr.realized, mode);
    pr.dispatch_cost = cd.cost;
    pr.slack_used = cd.slack_used;
    pr.corrective = cd.outputs;
  } catch (const InfeasibleError& e) {
    pr.flagged = true;
    pr.note = std::string("corrective stage infeasible: ") + e.what();
  }
  return pr;
}

SimReport run_simulation(const PowerSystem& system, const std::vector<HistoryRecord>& history,
                         const std::vector<HistoryRecord>& validation,
                         const SimulationConfig& config) {
  system.validate();
  check_config(system, history, validation, config);
  const ShiftFactorMatrix sf = compute_shift_factors(system);
  const std::vector<int> ccu = system.ccu_indices();
  const std::vector<int> nccu = system.nccu_indices();

  PowerSystem state = system;
  SimReport report;
  bool have_last = false;
  DispatchDecision last_good;

  for (int p : config.horizon) {
    const HistoryRecord& rec = validation[p];
    DispatchDecision decision;
    double cpu_dne = 0.0, cpu_obp = 0.0;
    bool degraded = false;
    std::string note;

    try {
      if (config.method == SimMethod::Proposed) {
        auto t0 = std::chrono::steady_clock::now();
        SampleSet s_dne = select_samples(history, rec.forecast, config.n_dne);
        DneConfig dcfg;
        dcfg.ccg.epsilon = config.epsilon;
        DneDecision dne = solve_dne(state, sf, s_dne, rec.forecast, dcfg);
        cpu_dne = seconds_since(t0);

        auto t1 = std::chrono::steady_clock::now();
        SampleSet s_obp = select_samples(history, rec.forecast, config.n_obp);
        ObpConfig ocfg;
        ocfg.penalty_mode = config.penalty_mode;
        ocfg.ccg.epsilon = config.epsilon;
        ObpDecision obp = solve_obp(state, sf, s_obp, rec.forecast, dne.lower, dne.upper, ocfg);
        cpu_obp = seconds_since(t1);

        decision = DispatchDecision{obp.base_obp, dne.lower, dne.upper};
      } else {
        auto t0 = std::chrono::steady_clock::now();
        EdDecision ed = solve_ed(state, sf, rec.forecast);
        cpu_obp = seconds_since(t0);

        auto t1 = std::chrono::steady_clock::now();
        OdneConfig ocfg;
        ocfg.ccg.epsilon = config.epsilon;
        OdneDecision od = solve_odne(state, sf, ed, ocfg);
        cpu_dne = seconds_since(t1);

        decision = DispatchDecision{ed.obp, od.lower, od.upper};
        if (od.degenerate) {
          degraded = true;
          note = "window degraded to the forecast point";
        }
      }
    } catch (const DispatchError& e) {
      // A failed decision stage never ends the run: hold the previous plan, or
      // fall back to a zero-width schedule at the forecast when there is none.
      degraded = true;
      note = sanitize_note(e.what());
      if (have_last) {
        decision = last_good;
      } else {
        EdDecision ed = solve_ed(state, sf, rec.forecast);
        decision = DispatchDecision{ed.obp, ed.vrg_dispatch, ed.vrg_dispatch};
      }
    }

    PeriodResult pr = realize_dispatch(state, sf, decision, rec.observed, config.penalty_mode);
    pr.period = p;
    pr.cpu_dne_s = cpu_dne;
    pr.cpu_obp_s = cpu_obp;
    if (degraded) {
      pr.flagged = true;
      pr.note = pr.note.empty() ? note : note + "; " + pr.note;
    }

    if (!degraded) {
      last_good = decision;
      have_last = true;
    }
    // Advance the previous-output state to what each unit actually ran at.
    if (!pr.corrective.empty()) {
      for (std::size_t t = 0; t < ccu.size(); ++t)
        state.conventional_units[ccu[t]].p_current = pr.corrective[t];
    }
    for (int i : nccu) state.conventional_units[i].p_current = decision.base_obp[i];

    report.per_period.push_back(std::move(pr));
  }

  const double n = static_cast<double>(report.per_period.size());
  int covered = 0;
  for (const PeriodResult& pr : report.per_period) {
    if (pr.covered) ++covered;
    report.avg_cost += pr.dispatch_cost / n;
    report.avg_wind += pr.wind_output_mw / n;
    report.avg_cpu += (pr.cpu_dne_s + pr.cpu_obp_s) / n;
  }
  report.coverage_rate = covered / n;
  return report;
}

void write_periods_csv(const std::string& path, const SimReport& report,
                       const PowerSystem& system, const SimulationConfig& config) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write period log '" + path + "'");
  out << "period,method,covered,wind_output_mw,dispatch_cost";
  for (const auto& v : system.vrg_units) out << ",coverage_width_" << v.id;
  out << ",cpu_dne_s,cpu_obp_s,slack_mw";
  for (const auto& v : system.vrg_units) out << ",lower_" << v.id;
  for (const auto& v : system.vrg_units) out << ",upper_" << v.id;
  for (const auto& v : system.vrg_units) out << ",observed_" << v.id;
  for (const auto& v : system.vrg_units) out << ",realized_" << v.id;
  out << ",note\n";
  for (const PeriodResult& pr : report.per_period) {
    out << pr.period << ',' << method_name(config.method) << ',' << (pr.covered ? 1 : 0) << ','
        << fmt(pr.wind_output_mw) << ',' << fmt(pr.dispatch_cost);
    for (double w : pr.dne_width) out << ',' << fmt(w);
    out << ',' << fmt(pr.cpu_dne_s) << ',' << fmt(pr.cpu_obp_s) << ',' << fmt(pr.slack_used);
    for (double v : pr.lower) out << ',' << fmt(v);
    for (double v : pr.upper) out << ',' << fmt(v);
    for (double v : pr.observed) out << ',' << fmt(v);
    for (double v : pr.realized) out << ',' << fmt(v);
    out << ',' << sanitize_note(pr.note) << '\n';
  }
  if (!out) throw SchemaError("failed while writing period log '" + path + "'");
}

std::string summary_to_json(const SimReport& report, const SimulationConfig& config) {
  int flagged = 0;
  for (const PeriodResult& pr : report.per_period)
    if (pr.flagged) ++flagged;
  nlohmann::json j;
  j["method"] = method_name(config.method);
  j["periods"] = report.per_period.size();
  j["coverage_rate"] = report.coverage_rate;
  j["avg_cost"] = report.avg_cost;
  j["avg_wind"] = report.avg_wind;
  j["avg_cpu"] = report.avg_cpu;
  j["flagged_periods"] = flagged;
  return j.dump(2) + "\n";
}

}  // namespace dispatch
