#pragma once

#include <string>
#include <vector>

#include "dispatch/baseline.hpp"
#include "dispatch/dne.hpp"
#include "dispatch/model.hpp"
#include "dispatch/obp.hpp"
#include "dispatch/sampling.hpp"

namespace dispatch {

enum class SimMethod { Proposed, Odne };

struct SimulationConfig {
  SimMethod method = SimMethod::Proposed;
  int n_dne = 400;
  int n_obp = 20;
  double epsilon = 1e-4;
  std::vector<int> horizon;  // validation period indices, processed in order
  // Long horizons keep running when a realized point lands outside the
  // corrective capability, so relief pricing is the simulation default.
  PenaltyMode penalty_mode = PenaltyMode::Penalized;
};

// What the period hands to real time: base points plus the admissible window.
struct DispatchDecision {
  std::vector<double> base_obp;      // per conventional unit, MW
  std::vector<double> lower, upper;  // per vrg, MW
};

struct PeriodResult {
  int period = 0;
  bool covered = false;
  bool flagged = false;  // degraded decision or failed corrective stage
  std::string note;      // empty when clean
  std::vector<double> lower, upper;     // per vrg, MW
  std::vector<double> observed;         // per vrg, MW
  std::vector<double> realized;         // per vrg after upper-limit curtailment
  std::vector<double> corrective;       // per corrective unit, MW
  std::vector<double> dne_width;        // per vrg, MW
  double wind_output_mw = 0.0;
  double dispatch_cost = 0.0;
  double slack_used = 0.0;
  double cpu_dne_s = 0.0;
  double cpu_obp_s = 0.0;
};

struct SimReport {
  std::vector<PeriodResult> per_period;
  double coverage_rate = 0.0;
  double avg_cost = 0.0;
  double avg_wind = 0.0;
  double avg_cpu = 0.0;
};

// Real-time stage for one period: curtail observations to the upper limits,
// run the corrective dispatch at the realized injections, and score coverage
// of the raw observation against the window. A strict-mode infeasibility is
// recorded on the result instead of thrown.
PeriodResult realize_dispatch(const PowerSystem& system, const ShiftFactorMatrix& sf,
                              const DispatchDecision& decision,
                              const std::vector<double>& observed, PenaltyMode mode);

// Receding-horizon loop: per period select samples from the history, decide
// (window + base points by the configured method), realize, then advance each
// unit's previous-output state to what it actually ran at.
SimReport run_simulation(const PowerSystem& system, const std::vector<HistoryRecord>& history,
                         const std::vector<HistoryRecord>& validation,
                         const SimulationConfig& config);

void write_periods_csv(const std::string& path, const SimReport& report,
                       const PowerSystem& system, const SimulationConfig& config);

std::string summary_to_json(const SimReport& report, const SimulationConfig& config);

}  // namespace dispatch
