#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dispatch/baseline.hpp"
#include "dispatch/errors.hpp"
#include "dispatch/model.hpp"
#include "dispatch/sampling.hpp"
#include "dispatch/sim.hpp"
#include "json.hpp"

using namespace dispatch;

namespace {

// Single bus with a wide corrective band: every realization is servable.
PowerSystem wide_one_bus() {
  nlohmann::json j;
  j["buses"] = {"b1"};
  j["slack_bus"] = "b1";
  j["lines"] = nlohmann::json::array();
  j["units"] = {{{"id", "g1"},
                 {"bus", "b1"},
                 {"class", "CCU"},
                 {"p_min", 0.0},
                 {"p_max", 100.0},
                 {"ramp", 100.0},
                 {"delta", 100.0},
                 {"p_current", 50.0},
                 {"cost", {{"constant", 0.0}, {"segments", {{100.0, 10.0}}}}}}};
  j["vrg"] = {{{"id", "w1"}, {"bus", "b1"}, {"capacity", 20.0}}};
  j["loads"] = {{"b1", 50.0}};
  return parse_case_text(j.dump());
}

// Single bus with a narrow corrective band: shortfalls exceed the band.
PowerSystem tight_one_bus() {
  nlohmann::json j;
  j["buses"] = {"b1"};
  j["slack_bus"] = "b1";
  j["lines"] = nlohmann::json::array();
  j["units"] = {{{"id", "g1"},
                 {"bus", "b1"},
                 {"class", "CCU"},
                 {"p_min", 0.0},
                 {"p_max", 100.0},
                 {"ramp", 100.0},
                 {"delta", 5.0},
                 {"p_current", 50.0},
                 {"cost", {{"constant", 0.0}, {"segments", {{100.0, 10.0}}}}}}};
  j["vrg"] = {{{"id", "w1"}, {"bus", "b1"}, {"capacity", 80.0}}};
  j["loads"] = {{"b1", 100.0}};
  return parse_case_text(j.dump());
}

// Radial chain b1 - b2 - b3 with the b2-b3 corridor binding: the corrective
// unit and w1 sit at b1, the held unit and w2 at the load bus b3.
const char* kChainCase = R"json({
  "buses": ["b1", "b2", "b3"],
  "slack_bus": "b1",
  "lines": [
    {"id": "l12", "from": "b1", "to": "b2", "reactance": 0.1, "capacity": 200},
    {"id": "l23", "from": "b2", "to": "b3", "reactance": 0.1, "capacity": 60}
  ],
  "units": [
    {"id": "g1", "bus": "b1", "class": "CCU", "p_min": 0, "p_max": 200, "ramp": 200,
     "delta": 20, "p_current": 50,
     "cost": {"constant": 0, "segments": [[200, 10]]}},
    {"id": "g2", "bus": "b3", "class": "NCCU", "p_min": 0, "p_max": 100, "ramp": 100,
     "delta": 0, "p_current": 30,
     "cost": {"constant": 0, "segments": [[100, 30]]}}
  ],
  "vrg": [
    {"id": "w1", "bus": "b1", "capacity": 30},
    {"id": "w2", "bus": "b3", "capacity": 30}
  ],
  "loads": {"b1": 0, "b2": 0, "b3": 100}
})json";

std::vector<HistoryRecord> make_history(const std::vector<std::vector<double>>& errors,
                                        const std::vector<double>& forecast) {
  std::vector<HistoryRecord> h;
  char buf[16];
  for (std::size_t k = 0; k < errors.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "h%04zu", k + 1);
    HistoryRecord r;
    r.timestamp = buf;
    r.forecast = forecast;
    r.error = errors[k];
    h.push_back(std::move(r));
  }
  return h;
}

HistoryRecord validation_rec(std::string ts, const std::vector<double>& forecast,
                             const std::vector<double>& error) {
  HistoryRecord r;
  r.timestamp = std::move(ts);
  r.forecast = forecast;
  r.error = error;
  r.observed.resize(forecast.size());
  for (std::size_t j = 0; j < forecast.size(); ++j) r.observed[j] = forecast[j] + error[j];
  return r;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(static_cast<bool>(in));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Deterministic 30-point error grid over [-3,7] x [-8,6] with the four box
// corners pinned first, so the sample hull is exact and selection is stable.
std::vector<std::vector<double>> chain_error_grid() {
  std::vector<std::vector<double>> errs = {{-3, -8}, {7, 6}, {-3, 6}, {7, -8}};
  for (int k = 0; k < 26; ++k) {
    double e1 = -3.0 + 10.0 * k / 25.0;
    double e2 = -8.0 + 14.0 * ((k * 7) % 26) / 25.0;
    errs.push_back({e1, e2});
  }
  return errs;
}

}  // namespace

TEST_CASE("curtailment clamps at the admitted ceiling and coverage scores the raw observation") {
  PowerSystem sys = wide_one_bus();
  ShiftFactorMatrix sf = compute_shift_factors(sys);
  DispatchDecision d{{45.0}, {0.0}, {8.0}};

  PeriodResult in_window = realize_dispatch(sys, sf, d, {5.0}, PenaltyMode::Strict);
  CHECK(in_window.covered);
  CHECK(!in_window.flagged);
  CHECK(in_window.realized[0] == doctest::Approx(5.0));
  CHECK(in_window.wind_output_mw == doctest::Approx(5.0));
  CHECK(in_window.dispatch_cost == doctest::Approx(450.0));
  CHECK(in_window.slack_used == doctest::Approx(0.0));
  REQUIRE(in_window.corrective.size() == 1);
  CHECK(in_window.corrective[0] == doctest::Approx(45.0));
  CHECK(in_window.dne_width[0] == doctest::Approx(8.0));

  PeriodResult above = realize_dispatch(sys, sf, d, {13.0}, PenaltyMode::Strict);
  CHECK(!above.covered);
  CHECK(above.realized[0] == doctest::Approx(8.0));
  CHECK(above.wind_output_mw == doctest::Approx(8.0));
  CHECK(above.dispatch_cost == doctest::Approx(420.0));

  // A ceiling past the physical capacity cannot admit more than the machine.
  DispatchDecision wide{{45.0}, {0.0}, {30.0}};
  PeriodResult capped = realize_dispatch(sys, sf, wide, {13.0}, PenaltyMode::Strict);
  CHECK(capped.covered);
  CHECK(capped.realized[0] == doctest::Approx(13.0));
  CHECK(capped.dispatch_cost == doctest::Approx(370.0));

  CHECK_THROWS_AS(realize_dispatch(sys, sf, d, {5.0, 1.0}, PenaltyMode::Strict), DimensionError);
  CHECK_THROWS_AS(realize_dispatch(sys, sf, DispatchDecision{{45.0}, {0.0}, {8.0, 9.0}}, {5.0},
                                   PenaltyMode::Strict),
                  DimensionError);
  CHECK_THROWS_AS(realize_dispatch(sys, sf, DispatchDecision{{45.0, 1.0}, {0.0}, {8.0}}, {5.0},
                                   PenaltyMode::Strict),
                  DimensionError);
  CHECK_THROWS_AS(realize_dispatch(sys, sf, DispatchDecision{{45.0}, {9.0}, {8.0}}, {5.0},
                                   PenaltyMode::Strict),
                  InvariantError);
  CHECK_THROWS_AS(realize_dispatch(sys, sf, d, {-1.0}, PenaltyMode::Strict), InvariantError);
}

TEST_CASE("a shortfall below the floor lands on the corrective units") {
  PowerSystem sys = tight_one_bus();
  ShiftFactorMatrix sf = compute_shift_factors(sys);
  DispatchDecision d{{60.0}, {35.0}, {45.0}};

  PeriodResult strict = realize_dispatch(sys, sf, d, {0.0}, PenaltyMode::Strict);
  CHECK(!strict.covered);
  CHECK(strict.flagged);
  CHECK(!strict.note.empty());
  CHECK(strict.realized[0] == doctest::Approx(0.0));
  CHECK(strict.dispatch_cost == doctest::Approx(0.0));
  CHECK(strict.corrective.empty());

  PeriodResult soft = realize_dispatch(sys, sf, d, {0.0}, PenaltyMode::Penalized);
  CHECK(!soft.covered);
  CHECK(!soft.flagged);
  CHECK(soft.slack_used == doctest::Approx(35.0));
  CHECK(soft.dispatch_cost == doctest::Approx(4150.0));
  REQUIRE(soft.corrective.size() == 1);
  CHECK(soft.corrective[0] == doctest::Approx(65.0));
}

TEST_CASE("a zero-error period matches the deterministic dispatch cost") {
  PowerSystem sys = wide_one_bus();
  ShiftFactorMatrix sf = compute_shift_factors(sys);
  std::vector<HistoryRecord> hist =
      make_history({{0.0}, {0.0}, {0.0}, {0.0}, {0.0}, {0.0}}, {5.0});
  std::vector<HistoryRecord> val = {validation_rec("v0001", {5.0}, {0.0})};

  SimulationConfig cfg;
  cfg.method = SimMethod::Proposed;
  cfg.n_dne = 6;
  cfg.n_obp = 3;
  cfg.horizon = {0};
  cfg.penalty_mode = PenaltyMode::Strict;
  SimReport rep = run_simulation(sys, hist, val, cfg);

  EdDecision ed = solve_ed(sys, sf, {5.0});
  REQUIRE(rep.per_period.size() == 1);
  const PeriodResult& pr = rep.per_period[0];
  CHECK(pr.covered);
  CHECK(!pr.flagged);
  CHECK(pr.dispatch_cost == doctest::Approx(ed.total_cost).epsilon(1e-6));
  CHECK(pr.wind_output_mw == doctest::Approx(5.0));
  CHECK(pr.slack_used == doctest::Approx(0.0));
  CHECK(pr.cpu_dne_s >= 0.0);
  CHECK(pr.cpu_obp_s >= 0.0);
  CHECK(rep.coverage_rate == doctest::Approx(1.0));
  CHECK(rep.avg_cost == doctest::Approx(pr.dispatch_cost));
  CHECK(rep.avg_wind == doctest::Approx(5.0));
}

TEST_CASE("previous outputs advance to what each unit actually ran at") {
  // Zero corrective band pins the base point to the realization the window
  // admits, and the tight ramp makes the next period depend on today's output.
  PowerSystem sys = wide_one_bus();
  sys.conventional_units[0].ramp = 3.0;
  sys.conventional_units[0].corrective_adjust = 0.0;
  std::vector<HistoryRecord> hist =
      make_history({{-3.0}, {-3.0}, {0.0}, {0.0}, {0.0}, {0.0}}, {5.0});
  std::vector<HistoryRecord> val = {validation_rec("v0001", {5.0}, {-3.0}),
                                    validation_rec("v0002", {5.0}, {0.0})};

  SimulationConfig cfg;
  cfg.n_dne = 6;
  cfg.n_obp = 2;
  cfg.horizon = {0, 1};
  SimReport a = run_simulation(sys, hist, val, cfg);
  REQUIRE(a.per_period.size() == 2);

  // Period 0: only the low cluster is reachable from 50 MW, so the plan rides
  // down to 48 MW and the window collapses onto the observed 2 MW.
  CHECK(a.per_period[0].covered);
  CHECK(a.per_period[0].lower[0] == doctest::Approx(2.0));
  CHECK(a.per_period[0].upper[0] == doctest::Approx(2.0));
  REQUIRE(a.per_period[0].corrective.size() == 1);
  CHECK(a.per_period[0].corrective[0] == doctest::Approx(48.0));
  CHECK(a.per_period[0].dispatch_cost == doctest::Approx(480.0));

  // Period 1: covering the four-sample cluster at 5 MW needs a 45 MW base
  // point, reachable only if the state advanced to the realized 48 MW.
  CHECK(a.per_period[1].covered);
  CHECK(!a.per_period[1].flagged);
  CHECK(a.per_period[1].lower[0] == doctest::Approx(5.0));
  CHECK(a.per_period[1].upper[0] == doctest::Approx(5.0));
  CHECK(a.per_period[1].dispatch_cost == doctest::Approx(450.0));

  // Replaying period 1 alone from a hand-advanced state reproduces the row.
  PowerSystem advanced = sys;
  advanced.conventional_units[0].p_current = 48.0;
  SimulationConfig tail = cfg;
  tail.horizon = {1};
  SimReport b = run_simulation(advanced, hist, val, tail);
  REQUIRE(b.per_period.size() == 1);
  CHECK(b.per_period[0].period == 1);
  CHECK(b.per_period[0].lower[0] == doctest::Approx(a.per_period[1].lower[0]));
  CHECK(b.per_period[0].upper[0] == doctest::Approx(a.per_period[1].upper[0]));
  CHECK(b.per_period[0].dispatch_cost == doctest::Approx(a.per_period[1].dispatch_cost));
  CHECK(b.per_period[0].realized[0] == doctest::Approx(a.per_period[1].realized[0]));
}

TEST_CASE("proposed windows track the samples where the price-weighted box cannot") {
  PowerSystem sys = parse_case_text(kChainCase);
  std::vector<HistoryRecord> hist = make_history(chain_error_grid(), {10.0, 10.0});
  std::vector<HistoryRecord> val = {
      validation_rec("v0001", {10.0, 10.0}, {6.0, -7.0}),
      validation_rec("v0002", {10.0, 10.0}, {2.0, -5.0}),
      validation_rec("v0003", {10.0, 10.0}, {-1.0, 5.0}),
      validation_rec("v0004", {10.0, 10.0}, {5.0, -1.0}),
  };

  SimulationConfig pc;
  pc.method = SimMethod::Proposed;
  pc.n_dne = 30;
  pc.n_obp = 10;
  pc.horizon = {0, 1, 2, 3};
  SimulationConfig oc = pc;
  oc.method = SimMethod::Odne;

  SimReport prop = run_simulation(sys, hist, val, pc);
  SimReport odne = run_simulation(sys, hist, val, oc);
  REQUIRE(prop.per_period.size() == 4);
  REQUIRE(odne.per_period.size() == 4);

  // Covering the whole sample box is feasible here, so the co-optimized
  // windows span the hull and every validation draw inside it is admitted.
  for (const PeriodResult& pr : prop.per_period) {
    CHECK(pr.covered);
    CHECK(!pr.flagged);
    CHECK(pr.slack_used == doctest::Approx(0.0));
  }
  CHECK(prop.coverage_rate == doctest::Approx(1.0));

  // The corridor floor (w2 >= 10 at the fixed base point) and the cheap-bus
  // width cap (u1 <= 10) reject three of the four draws.
  CHECK(odne.per_period[0].dne_width[0] == doctest::Approx(10.0));
  CHECK(odne.per_period[0].dne_width[1] == doctest::Approx(20.0));
  CHECK(odne.coverage_rate == doctest::Approx(0.25));

  CHECK(prop.avg_wind == doctest::Approx(21.0));
  CHECK(odne.avg_wind == doctest::Approx(17.75));
  CHECK(prop.avg_wind > odne.avg_wind + 1e-6);
  for (int p = 0; p < 4; ++p) {
    if (prop.per_period[p].covered && !odne.per_period[p].covered)
      CHECK(prop.per_period[p].wind_output_mw >= odne.per_period[p].wind_output_mw - 1e-9);
  }
  // Uncovered draws overload the corridor and pay relief, so the proposed
  // plan is also cheaper on this horizon.
  CHECK(prop.avg_cost < odne.avg_cost);
}

TEST_CASE("emitted files reproduce the report and differ only in timing") {
  PowerSystem sys = parse_case_text(kChainCase);
  std::vector<std::vector<double>> errs = chain_error_grid();
  errs.resize(12);
  std::vector<HistoryRecord> hist = make_history(errs, {10.0, 10.0});
  std::vector<HistoryRecord> val = {
      validation_rec("v0001", {10.0, 10.0}, {6.0, -7.0}),
      validation_rec("v0002", {10.0, 10.0}, {-1.0, 5.0}),
  };

  SimulationConfig cfg;
  cfg.method = SimMethod::Proposed;
  cfg.n_dne = 12;
  cfg.n_obp = 6;
  cfg.horizon = {0, 1};
  SimReport rep1 = run_simulation(sys, hist, val, cfg);
  SimReport rep2 = run_simulation(sys, hist, val, cfg);

  write_periods_csv("sim_periods_a.csv", rep1, sys, cfg);
  write_periods_csv("sim_periods_b.csv", rep2, sys, cfg);
  std::vector<std::string> a = read_lines("sim_periods_a.csv");
  std::vector<std::string> b = read_lines("sim_periods_b.csv");
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  CHECK(a[0] ==
        "period,method,covered,wind_output_mw,dispatch_cost,"
        "coverage_width_w1,coverage_width_w2,cpu_dne_s,cpu_obp_s,slack_mw,"
        "lower_w1,lower_w2,upper_w1,upper_w2,observed_w1,observed_w2,"
        "realized_w1,realized_w2,note");

  for (std::size_t i = 1; i < a.size(); ++i) {
    std::vector<std::string> fa = split_csv(a[i]);
    std::vector<std::string> fb = split_csv(b[i]);
    REQUIRE(fa.size() == 19);
    REQUIRE(fb.size() == 19);
    // Coverage, curtailment, and totals must be recomputable from the row.
    double lower[2] = {std::stod(fa[10]), std::stod(fa[11])};
    double upper[2] = {std::stod(fa[12]), std::stod(fa[13])};
    double obs[2] = {std::stod(fa[14]), std::stod(fa[15])};
    double realized[2] = {std::stod(fa[16]), std::stod(fa[17])};
    bool covered = true;
    double wind = 0.0;
    for (int jx = 0; jx < 2; ++jx) {
      if (obs[jx] < lower[jx] - 1e-9 || obs[jx] > upper[jx] + 1e-9) covered = false;
      CHECK(realized[jx] == doctest::Approx(std::min(obs[jx], upper[jx])));
      wind += realized[jx];
    }
    CHECK(fa[2] == (covered ? "1" : "0"));
    CHECK(std::stod(fa[3]) == doctest::Approx(wind));
    // Identical inputs must reproduce every column except the cpu readings.
    fa[7] = fa[8] = fb[7] = fb[8] = "";
    CHECK(fa == fb);
  }

  nlohmann::json s1 = nlohmann::json::parse(summary_to_json(rep1, cfg));
  nlohmann::json s2 = nlohmann::json::parse(summary_to_json(rep2, cfg));
  CHECK(s1["method"] == "proposed");
  CHECK(s1["periods"] == 2);
  CHECK(s1["coverage_rate"].get<double>() == doctest::Approx(rep1.coverage_rate));
  CHECK(s1["avg_cost"].get<double>() == doctest::Approx(rep1.avg_cost));
  CHECK(s1["coverage_rate"] == s2["coverage_rate"]);
  CHECK(s1["avg_cost"] == s2["avg_cost"]);
  CHECK(s1["avg_wind"] == s2["avg_wind"]);
  CHECK(s1["flagged_periods"] == 0);
  std::remove("sim_periods_a.csv");
  std::remove("sim_periods_b.csv");
}

TEST_CASE("configuration violations are rejected before any period runs") {
  PowerSystem sys = wide_one_bus();
  std::vector<HistoryRecord> hist = make_history({{0.0}, {0.0}}, {5.0});
  std::vector<HistoryRecord> val = {validation_rec("v0001", {5.0}, {0.0})};
  SimulationConfig good;
  good.n_dne = 2;
  good.n_obp = 1;
  good.horizon = {0};

  SimulationConfig c = good;
  c.horizon.clear();
  CHECK_THROWS_AS(run_simulation(sys, hist, val, c), InvariantError);
  c = good;
  c.n_dne = 0;
  CHECK_THROWS_AS(run_simulation(sys, hist, val, c), InvariantError);
  c = good;
  c.epsilon = 0.0;
  CHECK_THROWS_AS(run_simulation(sys, hist, val, c), InvariantError);
  c = good;
  c.horizon = {7};
  CHECK_THROWS_AS(run_simulation(sys, hist, val, c), InvariantError);

  std::vector<HistoryRecord> no_obs = val;
  no_obs[0].observed.clear();
  CHECK_THROWS_AS(run_simulation(sys, hist, no_obs, good), InvariantError);

  std::vector<HistoryRecord> wrong_width = val;
  wrong_width[0].forecast = {5.0, 5.0};
  CHECK_THROWS_AS(run_simulation(sys, hist, wrong_width, good), DimensionError);

  std::vector<HistoryRecord> late = hist;
  late[1].timestamp = "z9999";
  CHECK_THROWS_AS(run_simulation(sys, late, val, good), InvariantError);
}

TEST_CASE("a failed base-point stage falls back to a zero-width schedule") {
  PowerSystem sys = tight_one_bus();
  ShiftFactorMatrix sf = compute_shift_factors(sys);
  // The two nearest records disagree by 50 MW, far beyond the 10 MW band, so
  // the strict base-point stage has no jointly servable answer.
  std::vector<HistoryRecord> hist =
      make_history({{-30.0}, {20.0}, {0.0}, {0.0}}, {40.0});
  std::vector<HistoryRecord> val = {validation_rec("v0001", {40.0}, {0.0})};

  SimulationConfig cfg;
  cfg.n_dne = 4;
  cfg.n_obp = 2;
  cfg.horizon = {0};
  cfg.penalty_mode = PenaltyMode::Strict;
  SimReport rep = run_simulation(sys, hist, val, cfg);

  REQUIRE(rep.per_period.size() == 1);
  const PeriodResult& pr = rep.per_period[0];
  CHECK(pr.flagged);
  CHECK(!pr.note.empty());
  CHECK(pr.lower[0] == doctest::Approx(40.0));
  CHECK(pr.upper[0] == doctest::Approx(40.0));
  CHECK(pr.covered);
  CHECK(pr.dispatch_cost == doctest::Approx(solve_ed(sys, sf, {40.0}).total_cost));
}

TEST_CASE("a failed decision stage holds the previous plan") {
  // Riding down to the realized 30 MW strands the unit: the next period needs
  // at least 45 MW of base output but the ramp only reaches 40 MW, so the
  // whole decision stage is infeasible and the plan carries over.
  PowerSystem sys = wide_one_bus();
  sys.conventional_units[0].ramp = 10.0;
  std::vector<HistoryRecord> hist =
      make_history({{0.0}, {0.0}, {15.0}, {-2.0}}, {5.0});
  std::vector<HistoryRecord> val = {validation_rec("v0001", {5.0}, {15.0}),
                                    validation_rec("v0002", {5.0}, {-2.0})};

  SimulationConfig cfg;
  cfg.n_dne = 4;
  cfg.n_obp = 2;
  cfg.horizon = {0, 1};
  cfg.penalty_mode = PenaltyMode::Strict;
  SimReport rep = run_simulation(sys, hist, val, cfg);
  REQUIRE(rep.per_period.size() == 2);

  const PeriodResult& p0 = rep.per_period[0];
  CHECK(!p0.flagged);
  CHECK(p0.covered);
  CHECK(p0.lower[0] == doctest::Approx(0.0));
  CHECK(p0.upper[0] == doctest::Approx(20.0));
  CHECK(p0.realized[0] == doctest::Approx(20.0));
  CHECK(p0.dispatch_cost == doctest::Approx(300.0));

  const PeriodResult& p1 = rep.per_period[1];
  CHECK(p1.flagged);
  CHECK(p1.note.find("infeasible") != std::string::npos);
  CHECK(p1.lower[0] == doctest::Approx(0.0));
  CHECK(p1.upper[0] == doctest::Approx(20.0));
  CHECK(p1.covered);
  CHECK(p1.dispatch_cost == doctest::Approx(470.0));
  CHECK(rep.avg_cost == doctest::Approx(385.0));
}

TEST_CASE("the price-weighted baseline runs the same loop end to end") {
  PowerSystem sys = wide_one_bus();
  ShiftFactorMatrix sf = compute_shift_factors(sys);
  std::vector<HistoryRecord> hist = make_history({{0.0}, {1.0}, {-1.0}}, {5.0});
  std::vector<HistoryRecord> val = {validation_rec("v0001", {5.0}, {0.0})};

  SimulationConfig cfg;
  cfg.method = SimMethod::Odne;
  cfg.n_dne = 3;
  cfg.n_obp = 2;
  cfg.horizon = {0};
  SimReport rep = run_simulation(sys, hist, val, cfg);

  REQUIRE(rep.per_period.size() == 1);
  const PeriodResult& pr = rep.per_period[0];
  CHECK(pr.covered);
  CHECK(!pr.flagged);
  // The band is wide enough to admit the full capacity range.
  CHECK(pr.lower[0] == doctest::Approx(0.0));
  CHECK(pr.upper[0] == doctest::Approx(20.0));
  CHECK(pr.dispatch_cost == doctest::Approx(solve_ed(sys, sf, {5.0}).total_cost));
  CHECK(pr.cpu_dne_s >= 0.0);
  CHECK(pr.cpu_obp_s >= 0.0);

  write_periods_csv("sim_periods_odne.csv", rep, sys, cfg);
  std::vector<std::string> lines = read_lines("sim_periods_odne.csv");
  REQUIRE(lines.size() == 2);
  CHECK(split_csv(lines[1])[1] == "odne");
  std::remove("sim_periods_odne.csv");
}
