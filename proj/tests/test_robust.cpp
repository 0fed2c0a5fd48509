#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dispatch/errors.hpp"
#include "dispatch/robust.hpp"
#include "json.hpp"

using namespace dispatch;

namespace {

// min sum of costs over box first-stage variables named x0, x1, ...
MixedIntegerProgram box_first_stage(const std::vector<std::pair<double, double>>& bounds,
                                    const std::vector<double>& costs) {
  MixedIntegerProgram fs;
  for (std::size_t i = 0; i < bounds.size(); ++i)
    fs.base.add_variable("x" + std::to_string(i), bounds[i].first, bounds[i].second, costs[i]);
  return fs;
}

ScenarioRow row(std::string name, std::vector<LinearTerm> x,
                std::vector<std::pair<int, double>> v, std::vector<LinearTerm> y, double rhs) {
  ScenarioRow r;
  r.name = std::move(name);
  r.x_terms = std::move(x);
  r.v_terms = std::move(v);
  r.y_terms = std::move(y);
  r.rhs = rhs;
  return r;
}

// Inner feasibility slack at one vertex for rows without recourse terms:
// sum over rows of max(0, lhs - rhs).
double closed_form_slack(const TwoStageProblem& p, const std::vector<double>& x,
                         const std::vector<double>& v) {
  double total = 0.0;
  for (const auto& r : p.rows) {
    double lhs = 0.0;
    REQUIRE(r.y_terms.empty());
    for (const auto& t : r.x_terms) lhs += t.coef * x[t.var];
    for (const auto& [j, k, c] : r.xv_terms) lhs += c * x[j] * v[k];
    for (const auto& [k, g] : r.v_terms) lhs += g * v[k];
    total += std::max(0.0, lhs - r.rhs);
  }
  return total;
}

TwoStageProblem random_two_stage(std::mt19937_64& rng, int max_n,
                                 std::vector<double>* x_fixed) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  const int nx = 1 + static_cast<int>(rng() % 3);
  const int n = 1 + static_cast<int>(rng() % max_n);
  const int ny = static_cast<int>(rng() % 3);
  const int nrows = 1 + static_cast<int>(rng() % 5);

  TwoStageProblem p;
  for (int i = 0; i < nx; ++i) {
    const double ub = 1.0 + 4.0 * u01(rng);
    p.first_stage.base.add_variable("x" + std::to_string(i), 0.0, ub, 1.0 + u01(rng));
    if (x_fixed) x_fixed->push_back(ub * u01(rng));
  }
  p.uncertainty_dim = n;
  for (int t = 0; t < ny; ++t) p.recourse_names.push_back("y" + std::to_string(t));

  for (int r = 0; r < nrows; ++r) {
    ScenarioRow sr;
    sr.name = "r" + std::to_string(r);
    for (int i = 0; i < nx; ++i)
      if (u01(rng) < 0.7) sr.x_terms.push_back({i, coef(rng)});
    for (int i = 0; i < nx; ++i)
      for (int k = 0; k < n; ++k)
        if (u01(rng) < 0.25) sr.xv_terms.emplace_back(i, k, coef(rng));
    for (int k = 0; k < n; ++k)
      if (u01(rng) < 0.5) sr.v_terms.push_back({k, coef(rng)});
    for (int t = 0; t < ny; ++t)
      if (u01(rng) < 0.6) {
        double c = coef(rng);
        if (std::abs(c) < 0.2) c = c < 0 ? -0.2 : 0.2;
        sr.y_terms.push_back({t, c});
      }
    sr.rhs = -2.0 + 10.0 * u01(rng);
    p.rows.push_back(std::move(sr));
  }
  return p;
}

}  // namespace

TEST_CASE("two-stage validation rejects malformed data") {
  TwoStageProblem p;
  p.first_stage = box_first_stage({{0, 1}}, {1});
  p.uncertainty_dim = 1;
  p.rows.push_back(row("ok", {{0, 1.0}}, {{0, 1.0}}, {}, 0.0));
  CHECK_NOTHROW(p.validate());

  TwoStageProblem bad = p;
  bad.rows[0].x_terms[0].var = 5;
  CHECK_THROWS_AS(bad.validate(), DimensionError);

  bad = p;
  bad.rows[0].v_terms[0].first = 1;
  CHECK_THROWS_AS(bad.validate(), DimensionError);

  bad = p;
  bad.rows[0].y_terms.push_back({0, 1.0});
  CHECK_THROWS_AS(bad.validate(), DimensionError);

  bad = p;
  bad.rows[0].xv_terms.emplace_back(0, 3, 1.0);
  CHECK_THROWS_AS(bad.validate(), DimensionError);

  bad = p;
  bad.recourse_names = {"y", "y"};
  CHECK_THROWS_AS(bad.validate(), InvariantError);

  bad = p;
  bad.recourse_names = {""};
  CHECK_THROWS_AS(bad.validate(), InvariantError);

  bad = p;
  bad.recourse_names = {"x0"};
  CHECK_THROWS_AS(bad.validate(), InvariantError);

  bad = p;
  bad.uncertainty_dim = -1;
  CHECK_THROWS_AS(bad.validate(), InvariantError);
}

TEST_CASE("build_master instantiates per-scenario recourse blocks") {
  // Rows 2v - y <= 0 and y - x <= 0: the scenario v=1 forces y >= 2, x >= y.
  TwoStageProblem p;
  p.first_stage = box_first_stage({{0, 10}}, {1});
  p.uncertainty_dim = 1;
  p.recourse_names = {"y"};
  p.rows.push_back(row("need", {}, {{0, 2.0}}, {{0, -1.0}}, 0.0));
  p.rows.push_back(row("cap", {{0, -1.0}}, {}, {{0, 1.0}}, 0.0));

  MixedIntegerProgram m1 = build_master(p, {Scenario{{1.0}}});
  CHECK(m1.base.find_variable("y__s0").has_value());
  CHECK_FALSE(m1.base.find_variable("y__s1").has_value());
  Solution s1 = solve_milp(m1, MilpOptions{});
  REQUIRE(s1.optimal());
  CHECK(s1.objective == doctest::Approx(2.0));

  // A second, slack scenario adds a fresh recourse copy and changes nothing.
  MixedIntegerProgram m2 = build_master(p, {Scenario{{1.0}}, Scenario{{0.0}}});
  CHECK(m2.base.find_variable("y__s1").has_value());
  Solution s2 = solve_milp(m2, MilpOptions{});
  REQUIRE(s2.optimal());
  CHECK(s2.objective == doctest::Approx(2.0));

  CHECK_THROWS_AS(build_master(p, {Scenario{{0.5, 0.5}}}), DimensionError);
  CHECK_THROWS_AS(build_master(p, {Scenario{{1.5}}}), InvariantError);
}

TEST_CASE("subproblem slack is zero when recourse absorbs every vertex") {
  TwoStageProblem p;
  p.first_stage = box_first_stage({{0, 10}}, {1});
  p.uncertainty_dim = 2;
  p.recourse_names = {"y"};
  // v1 + v2 - y <= 0 with y <= x: feasible whenever x >= 2.
  p.rows.push_back(row("need", {}, {{0, 1.0}, {1, 1.0}}, {{0, -1.0}}, 0.0));
  p.rows.push_back(row("cap", {{0, -1.0}}, {}, {{0, 1.0}}, 0.0));

  SubproblemResult at3 = solve_subproblem(p, {3.0});
  CHECK(at3.theta == doctest::Approx(0.0).epsilon(1e-9));

  SubproblemResult at0 = solve_subproblem(p, {0.0});
  CHECK(at0.theta == doctest::Approx(2.0));
  CHECK(at0.worst.v == std::vector<double>{1.0, 1.0});
}

TEST_CASE("one-dimensional margin example agrees with the vertex oracle") {
  TwoStageProblem p;
  p.first_stage = box_first_stage({{0, 10}}, {1});
  p.uncertainty_dim = 1;
  p.recourse_names = {"y"};
  p.rows.push_back(row("need", {}, {{0, 2.0}}, {{0, -1.0}}, 0.0));
  p.rows.push_back(row("cap", {{0, -1.0}}, {}, {{0, 1.0}}, 0.0));

  SubproblemResult milp = solve_subproblem(p, {0.0});
  SubproblemResult enumd = enumerate_subproblem(p, {0.0});
  CHECK(milp.theta == doctest::Approx(2.0));
  CHECK(enumd.theta == doctest::Approx(2.0));
  CHECK(milp.worst.v == std::vector<double>{1.0});
  CHECK(enumd.worst.v == std::vector<double>{1.0});

  CHECK(solve_subproblem(p, {2.0}).theta == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(enumerate_subproblem(p, {2.0}).theta == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("zero uncertain dimensions reduce to a single slack evaluation") {
  TwoStageProblem p;
  p.first_stage = box_first_stage({{0, 10}}, {1});
  p.uncertainty_dim = 0;
  p.rows.push_back(row("floor", {{0, -1.0}}, {}, {}, -3.0));  // -x <= -3

  CHECK(enumerate_subproblem(p, {1.0}).theta == doctest::Approx(2.0));
  CHECK(solve_subproblem(p, {1.0}).theta == doctest::Approx(2.0));
  CHECK(enumerate_subproblem(p, {5.0}).theta == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("complement-symmetric instance attains its slack at both poles") {
  TwoStageProblem p;
  p.first_stage = box_first_stage({{0, 10}}, {1});
  p.uncertainty_dim = 2;
  p.rows.push_back(row("hi", {{0, -1.0}}, {{0, 1.0}, {1, 1.0}}, {}, 1.0));
  p.rows.push_back(row("lo", {{0, -1.0}}, {{0, -1.0}, {1, -1.0}}, {}, -1.0));

  const std::vector<double> x{0.0};
  SubproblemResult r = enumerate_subproblem(p, x);
  CHECK(r.theta == doctest::Approx(1.0));
  const bool at_pole = r.worst.v == std::vector<double>{0.0, 0.0} ||
                       r.worst.v == std::vector<double>{1.0, 1.0};
  CHECK(at_pole);
  CHECK(closed_form_slack(p, x, {0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(closed_form_slack(p, x, {1.0, 1.0}) == doctest::Approx(1.0));
  CHECK(solve_subproblem(p, x).theta == doctest::Approx(1.0));
}

TEST_CASE("dualized subproblem matches vertex enumeration on random instances") {
  std::mt19937_64 rng(90125);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> x;
    TwoStageProblem p = random_two_stage(rng, 6, &x);
    SubproblemResult milp = solve_subproblem(p, x);
    SubproblemResult enumd = enumerate_subproblem(p, x);
    CAPTURE(trial);
    CHECK(std::abs(milp.theta - enumd.theta) <= 1e-6 * std::max(1.0, std::abs(enumd.theta)));
    CHECK(milp.theta >= 0.0);
    CHECK(enumd.theta >= 0.0);
  }
}

TEST_CASE("enumeration refuses oversized vertex sets and misaligned x") {
  TwoStageProblem p;
  p.first_stage = box_first_stage({{0, 1}}, {1});
  p.uncertainty_dim = 13;
  p.rows.push_back(row("r", {{0, 1.0}}, {}, {}, 0.0));
  CHECK_THROWS_AS(enumerate_subproblem(p, {0.0}), InvariantError);

  p.uncertainty_dim = 1;
  CHECK_THROWS_AS(enumerate_subproblem(p, {0.0, 0.0}), DimensionError);
  CHECK_THROWS_AS(solve_subproblem(p, {0.0, 0.0}), DimensionError);
}

TEST_CASE("robust loop stops immediately when the first stage is already robust") {
  TwoStageProblem p;
  p.first_stage = box_first_stage({{5, 10}}, {1});
  p.uncertainty_dim = 1;
  p.rows.push_back(row("r", {{0, -1.0}}, {{0, 1.0}}, {}, 0.0));  // v - x <= 0

  CcgResult r = run_ccg(p);
  CHECK(r.iterations == 1);
  CHECK(r.scenarios.empty());
  CHECK(r.master_objective == doctest::Approx(5.0));
  CHECK(r.trace.converged);
  CHECK(r.trace.terminal_theta < 1e-4);
  REQUIRE(r.trace.iterations.size() == 1);
  CHECK(r.trace.iterations[0].theta < 1e-4);
}

TEST_CASE("robust loop adds exactly the all-ones vertex when only it violates") {
  TwoStageProblem p;
  p.first_stage = box_first_stage({{0, 10}}, {1});
  p.uncertainty_dim = 2;
  p.rows.push_back(row("r", {{0, -1.0}}, {{0, 1.0}, {1, 1.0}}, {}, 1.0));

  // At the unguarded optimum x=0, only the (1,1) vertex is infeasible.
  CHECK(closed_form_slack(p, {0.0}, {0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(closed_form_slack(p, {0.0}, {1.0, 0.0}) == doctest::Approx(0.0));
  CHECK(closed_form_slack(p, {0.0}, {0.0, 1.0}) == doctest::Approx(0.0));
  CHECK(closed_form_slack(p, {0.0}, {1.0, 1.0}) == doctest::Approx(1.0));

  CcgResult r = run_ccg(p);
  CHECK(r.iterations == 2);
  REQUIRE(r.scenarios.size() == 1);
  CHECK(r.scenarios[0].v == std::vector<double>{1.0, 1.0});
  CHECK(r.x[0] == doctest::Approx(1.0));
  CHECK(r.trace.converged);
  CHECK(enumerate_subproblem(p, r.x).theta < 1e-4);
}

TEST_CASE("robust loop trajectory on a two-variable instance") {
  TwoStageProblem p;
  p.first_stage = box_first_stage({{0, 10}, {0, 10}}, {1, 1});
  p.uncertainty_dim = 2;
  p.rows.push_back(row("r1", {{0, -1.0}}, {{0, 2.0}, {1, -1.0}}, {}, 0.0));
  p.rows.push_back(row("r2", {{1, -1.0}}, {{0, -1.0}, {1, 2.0}}, {}, 0.0));

  CcgResult r = run_ccg(p);
  CHECK(r.trace.converged);
  CHECK(r.iterations <= 8);
  CHECK(r.master_objective == doctest::Approx(4.0));
  CHECK(r.x[0] == doctest::Approx(2.0));
  CHECK(r.x[1] == doctest::Approx(2.0));

  for (std::size_t i = 1; i < r.trace.iterations.size(); ++i)
    CHECK(r.trace.iterations[i].master_objective >=
          r.trace.iterations[i - 1].master_objective - 1e-9);
  for (std::size_t a = 0; a < r.scenarios.size(); ++a)
    for (std::size_t b = a + 1; b < r.scenarios.size(); ++b)
      CHECK(r.scenarios[a].v != r.scenarios[b].v);
  CHECK(enumerate_subproblem(p, r.x).theta < 1e-4);

  // Seeding the final scenario set converges in one iteration.
  CcgOptions seeded;
  seeded.initial_scenarios = r.scenarios;
  CcgResult again = run_ccg(p, seeded);
  CHECK(again.iterations == 1);
  CHECK(again.master_objective == doctest::Approx(4.0));
}

TEST_CASE("robust loop surfaces infeasibility and iteration exhaustion") {
  TwoStageProblem p;
  p.first_stage = box_first_stage({{0, 1}}, {1});
  p.uncertainty_dim = 1;
  p.rows.push_back(row("r", {{0, -1.0}}, {{0, 2.0}}, {}, 0.0));  // 2v - x <= 0
  CHECK_THROWS_AS(run_ccg(p), InfeasibleError);

  TwoStageProblem q;
  q.first_stage = box_first_stage({{0, 10}, {0, 10}}, {1, 1});
  q.uncertainty_dim = 2;
  q.rows.push_back(row("r1", {{0, -1.0}}, {{0, 2.0}, {1, -1.0}}, {}, 0.0));
  q.rows.push_back(row("r2", {{1, -1.0}}, {{0, -1.0}, {1, 2.0}}, {}, 0.0));
  CcgOptions tight;
  tight.max_iterations = 1;
  CHECK_THROWS_AS(run_ccg(q, tight), SolveError);

  CcgOptions bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(run_ccg(q, bad), InvariantError);
}

TEST_CASE("random robust instances keep the loop invariants") {
  std::mt19937_64 rng(777001);
  int converged = 0;
  for (int trial = 0; trial < 30; ++trial) {
    TwoStageProblem p = random_two_stage(rng, 4, nullptr);
    CAPTURE(trial);
    CcgResult r;
    try {
      r = run_ccg(p);
    } catch (const InfeasibleError&) {
      continue;  // no robust-feasible x exists for this draw
    }
    ++converged;
    CHECK(r.trace.converged);
    CHECK(r.iterations <= (1 << p.uncertainty_dim) + 4);
    for (std::size_t i = 1; i < r.trace.iterations.size(); ++i)
      CHECK(r.trace.iterations[i].master_objective >=
            r.trace.iterations[i - 1].master_objective - 1e-9);
    CHECK(enumerate_subproblem(p, r.x).theta < 1e-4);
  }
  CHECK(converged >= 10);
}

TEST_CASE("trace export emits one JSON record per iteration") {
  CcgTrace trace;
  trace.iterations.push_back({1, 2.5, 0.75, {1.0, 0.0}});
  trace.iterations.push_back({2, 3.0, 0.0, {0.0, 1.0}});
  trace.terminal_theta = 0.0;
  trace.converged = true;

  std::ostringstream out;
  write_trace_jsonl(trace, out);
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    nlohmann::json rec = nlohmann::json::parse(line);
    ++rows;
    CHECK(rec["iter"] == rows);
    CHECK(rec.contains("master_obj"));
    CHECK(rec.contains("theta"));
    CHECK(rec["scenario"].is_array());
  }
  CHECK(rows == 2);
}
