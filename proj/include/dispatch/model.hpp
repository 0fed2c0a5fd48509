#pragma once

#include <string>
#include <vector>

#include "dispatch/errors.hpp"

namespace dispatch {

// Conventional units are either corrective (re-dispatchable in real time within
// +/- corrective_adjust of their base point) or non-corrective (held at the base point).
enum class ControlClass { Ccu, Nccu };

struct CostSegment {
  double breakpoint;      // MW, upper end of the segment
  double marginal_cost;   // $/MWh on the segment
};

// Convex piecewise-linear generation cost. Segment s covers
// (previous breakpoint, breakpoint_s], with the first segment starting at p_min.
// constant_term is the cost at p_min.
struct CostCurve {
  double constant_term = 0.0;
  std::vector<CostSegment> segments;

  double value(double p_min, double p) const;
  double max_marginal() const;
};

struct ConventionalUnit {
  std::string id;
  std::string bus;
  ControlClass control_class = ControlClass::Nccu;
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp = 0.0;               // max |p_base - p_current| between periods
  double corrective_adjust = 0.0;  // real-time band around the base point (CCU only)
  double p_current = 0.0;          // output in the preceding period
  CostCurve cost;

  double cost_at(double p) const { return cost.value(p_min, p); }
};

struct VrgUnit {
  std::string id;
  std::string bus;
  double capacity = 0.0;  // W^max, MW
};

struct Line {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double reactance = 0.0;  // per-unit series reactance, > 0
  double capacity = 0.0;   // MW flow limit, applied symmetrically
};

struct PowerSystem {
  std::vector<std::string> buses;
  std::string slack_bus;
  std::vector<Line> lines;
  std::vector<ConventionalUnit> conventional_units;
  std::vector<VrgUnit> vrg_units;
  std::vector<double> loads;  // MW per bus, aligned with `buses`

  int bus_index(const std::string& name) const;  // TopologyError if undeclared
  int slack_index() const { return bus_index(slack_bus); }
  double total_load() const;
  std::vector<int> ccu_indices() const;
  std::vector<int> nccu_indices() const;
  double max_marginal_cost() const;

  // Enforces every structural invariant (bounds ordering, cost-curve shape,
  // connectivity, nonnegative loads...). load_case calls this; hand-built
  // systems in tests should call it too.
  void validate() const;
};

// entries[l][n]: MW on line l (positive in the from->to direction) per MW
// injected at bus n and withdrawn at the slack. The slack column is zero.
struct ShiftFactorMatrix {
  std::vector<std::vector<double>> entries;

  int line_count() const { return static_cast<int>(entries.size()); }
  int bus_count() const { return entries.empty() ? 0 : static_cast<int>(entries.front().size()); }
};

PowerSystem load_case(const std::string& path);
PowerSystem parse_case_text(const std::string& json_text);  // same contract, in-memory

ShiftFactorMatrix compute_shift_factors(const PowerSystem& system);

// Flows for a balanced injection vector (one entry per bus, summing to ~0).
std::vector<double> line_flows(const ShiftFactorMatrix& sf, const std::vector<double>& injections);

std::string case_to_json_text(const PowerSystem& system);  // round-trip helper

}  // namespace dispatch
