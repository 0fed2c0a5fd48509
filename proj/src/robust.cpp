#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dispatch/robust.hpp"
#include "json.hpp"

namespace dispatch {

namespace {

void check_x_size(const TwoStageProblem& p, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != p.first_stage.base.num_variables())
    throw DimensionError("fixed first-stage vector not aligned with the first-stage program");
}

// Scenario-side coefficient of v_k in a row, at fixed first-stage values:
// q_k(x) = g_k + sum_j c_jk x_j.
std::vector<double> scenario_coefficients(const ScenarioRow& row, int n,
                                          const std::vector<double>& x) {
  std::vector<double> q(n, 0.0);
  for (const auto& [j, k, c] : row.xv_terms) q[k] += c * x[j];
  for (const auto& [k, g] : row.v_terms) q[k] += g;
  return q;
}

double x_part(const ScenarioRow& row, const std::vector<double>& x) {
  double acc = 0.0;
  for (const auto& t : row.x_terms) acc += t.coef * x[t.var];
  return acc;
}

}  // namespace

void TwoStageProblem::validate() const {
  if (uncertainty_dim < 0) throw InvariantError("negative uncertainty dimension");
  const int nx = first_stage.base.num_variables();
  std::set<std::string> names;
  for (const auto& name : recourse_names) {
    if (name.empty()) throw InvariantError("empty recourse variable name");
    if (!names.insert(name).second)
      throw InvariantError("duplicate recourse variable name '" + name + "'");
    if (first_stage.base.find_variable(name))
      throw InvariantError("recourse name '" + name + "' collides with a first-stage variable");
  }
  const int ny = static_cast<int>(recourse_names.size());
  for (const auto& row : rows) {
    for (const auto& t : row.x_terms)
      if (t.var < 0 || t.var >= nx)
        throw DimensionError("row '" + row.name + "': first-stage index out of range");
    for (const auto& [j, k, c] : row.xv_terms) {
      (void)c;
      if (j < 0 || j >= nx)
        throw DimensionError("row '" + row.name + "': bilinear first-stage index out of range");
      if (k < 0 || k >= uncertainty_dim)
        throw DimensionError("row '" + row.name + "': bilinear scenario index out of range");
    }
    for (const auto& [k, g] : row.v_terms) {
      (void)g;
      if (k < 0 || k >= uncertainty_dim)
        throw DimensionError("row '" + row.name + "': scenario index out of range");
    }
    for (const auto& t : row.y_terms)
      if (t.var < 0 || t.var >= ny)
        throw DimensionError("row '" + row.name + "': recourse index out of range");
  }
}

MixedIntegerProgram build_master(const TwoStageProblem& problem,
                                 const std::vector<Scenario>& scenarios) {
  problem.validate();
  MixedIntegerProgram master = problem.first_stage;

  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const std::vector<double>& v = scenarios[si].v;
    if (static_cast<int>(v.size()) != problem.uncertainty_dim)
      throw DimensionError("scenario dimension mismatch");
    for (double vk : v)
      if (!(vk >= -1e-9 && vk <= 1.0 + 1e-9))
        throw InvariantError("scenario component outside [0, 1]");

    const std::string suffix = "__s" + std::to_string(si);
    std::vector<int> ymap;
    ymap.reserve(problem.recourse_names.size());
    for (const auto& name : problem.recourse_names)
      ymap.push_back(master.base.add_variable(name + suffix, -kInfinity, kInfinity, 0.0));

    for (const auto& row : problem.rows) {
      std::map<int, double> coef;
      for (const auto& t : row.x_terms) coef[t.var] += t.coef;
      for (const auto& [j, k, c] : row.xv_terms) coef[j] += c * v[k];
      double rhs = row.rhs;
      for (const auto& [k, g] : row.v_terms) rhs -= g * v[k];

      std::vector<LinearTerm> terms;
      terms.reserve(coef.size() + row.y_terms.size());
      for (const auto& [var, c] : coef) terms.push_back({var, c});
      for (const auto& t : row.y_terms) terms.push_back({ymap[t.var], t.coef});
      master.base.add_row(row.name + suffix, std::move(terms), RowSense::Le, rhs);
    }
  }
  return master;
}

MilpOptions default_subproblem_options() {
  MilpOptions o;
  o.gap_tol = 1e-9;
  return o;
}

SubproblemResult solve_subproblem(const TwoStageProblem& problem,
                                  const std::vector<double>& x_fixed) {
  return solve_subproblem(problem, x_fixed, default_subproblem_options());
}

SubproblemResult solve_subproblem(const TwoStageProblem& problem,
                                  const std::vector<double>& x_fixed, const MilpOptions& opts) {
  problem.validate();
  check_x_size(problem, x_fixed);
  const int nrows = static_cast<int>(problem.rows.size());
  const int n = problem.uncertainty_dim;

  MixedIntegerProgram dual;
  LinearProgram& lp = dual.base;
  lp.set_objective_sense(ObjSense::Maximize);

  // pi_i in [0,1]: dual of row i of the slacked inner LP. The unit slack cost
  // caps the duals at 1, which is what makes the product linearization exact.
  std::vector<int> pi(nrows);
  for (int i = 0; i < nrows; ++i)
    pi[i] = lp.add_variable("pi_" + std::to_string(i), 0.0, 1.0,
                            x_part(problem.rows[i], x_fixed) - problem.rows[i].rhs);

  std::vector<int> vvar(n);
  for (int k = 0; k < n; ++k) {
    vvar[k] = lp.add_variable("v_" + std::to_string(k), 0.0, 1.0, 0.0);
    dual.mark_binary(vvar[k]);
  }

  // Dual feasibility: each free recourse variable zeroes its dual column.
  std::vector<std::vector<LinearTerm>> ycols(problem.recourse_names.size());
  for (int i = 0; i < nrows; ++i)
    for (const auto& t : problem.rows[i].y_terms)
      if (t.coef != 0.0) ycols[t.var].push_back({pi[i], t.coef});
  for (std::size_t t = 0; t < ycols.size(); ++t)
    lp.add_row("ycol_" + std::to_string(t), ycols[t], RowSense::Eq, 0.0);

  // w_ik = pi_i * v_k, exact for binary v with pi in [0,1].
  for (int i = 0; i < nrows; ++i) {
    const std::vector<double> q = scenario_coefficients(problem.rows[i], n, x_fixed);
    for (int k = 0; k < n; ++k) {
      if (std::abs(q[k]) < 1e-12) continue;
      const std::string tag = std::to_string(i) + "_" + std::to_string(k);
      const int w = lp.add_variable("w_" + tag, 0.0, 1.0, q[k]);
      lp.add_row("wcap_pi_" + tag, {{w, 1.0}, {pi[i], -1.0}}, RowSense::Le, 0.0);
      lp.add_row("wcap_v_" + tag, {{w, 1.0}, {vvar[k], -1.0}}, RowSense::Le, 0.0);
      lp.add_row("wfloor_" + tag, {{pi[i], 1.0}, {vvar[k], 1.0}, {w, -1.0}}, RowSense::Le, 1.0);
    }
  }

  Solution sol = solve_milp(dual, opts);
  if (!sol.optimal())
    throw SolveError("robust subproblem did not solve to optimality");
  if (sol.objective < -1e-6)
    throw InvariantError("robust subproblem returned negative worst-case slack");

  SubproblemResult out;
  out.theta = std::max(0.0, sol.objective);
  out.worst.v.resize(n);
  for (int k = 0; k < n; ++k) out.worst.v[k] = sol.values[vvar[k]] > 0.5 ? 1.0 : 0.0;
  return out;
}

SubproblemResult enumerate_subproblem(const TwoStageProblem& problem,
                                      const std::vector<double>& x_fixed,
                                      const SimplexOptions& opts) {
  problem.validate();
  check_x_size(problem, x_fixed);
  if (problem.uncertainty_dim > 12)
    throw InvariantError("enumerate_subproblem refuses more than 12 uncertain dimensions");
  const int n = problem.uncertainty_dim;
  const int nrows = static_cast<int>(problem.rows.size());

  std::vector<std::vector<double>> q(nrows);
  std::vector<double> xp(nrows);
  for (int i = 0; i < nrows; ++i) {
    q[i] = scenario_coefficients(problem.rows[i], n, x_fixed);
    xp[i] = x_part(problem.rows[i], x_fixed);
  }

  SubproblemResult best;
  best.theta = -1.0;
  std::vector<double> v(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (int k = 0; k < n; ++k) v[k] = (mask >> k) & 1u ? 1.0 : 0.0;

    LinearProgram inner;
    std::vector<int> y;
    y.reserve(problem.recourse_names.size());
    for (const auto& name : problem.recourse_names)
      y.push_back(inner.add_variable(name, -kInfinity, kInfinity, 0.0));
    for (int i = 0; i < nrows; ++i) {
      const int s = inner.add_variable("s_" + std::to_string(i), 0.0, kInfinity, 1.0);
      std::vector<LinearTerm> terms;
      for (const auto& t : problem.rows[i].y_terms) terms.push_back({y[t.var], t.coef});
      terms.push_back({s, -1.0});
      double rhs = problem.rows[i].rhs - xp[i];
      for (int k = 0; k < n; ++k) rhs -= q[i][k] * v[k];
      inner.add_row(problem.rows[i].name, std::move(terms), RowSense::Le, rhs);
    }

    Solution sol = solve_lp(inner, opts);
    if (!sol.optimal())
      throw SolveError("slacked recourse evaluation did not solve to optimality");
    if (sol.objective > best.theta) {
      best.theta = sol.objective;
      best.worst.v = v;
    }
  }
  best.theta = std::max(0.0, best.theta);
  return best;
}

void write_trace_jsonl(const CcgTrace& trace, std::ostream& out) {
  for (const auto& it : trace.iterations) {
    nlohmann::json rec;
    rec["iter"] = it.iteration;
    rec["master_obj"] = it.master_objective;
    rec["theta"] = it.theta;
    rec["scenario"] = it.scenario;
    out << rec.dump() << "\n";
  }
}

CcgResult run_ccg(const TwoStageProblem& problem, const CcgOptions& opts) {
  problem.validate();
  if (!(opts.epsilon > 0.0)) throw InvariantError("convergence tolerance must be positive");

  long max_iter = opts.max_iterations;
  if (max_iter <= 0)
    max_iter = problem.uncertainty_dim < 30
                   ? (1L << problem.uncertainty_dim) + 4
                   : std::numeric_limits<long>::max();

  CcgResult result;
  result.scenarios = opts.initial_scenarios;
  const int nx = problem.first_stage.base.num_variables();

  for (long iter = 1;; ++iter) {
    MixedIntegerProgram master = build_master(problem, result.scenarios);
    Solution sol = solve_milp(master, opts.master);
    if (sol.status == SolveStatus::Infeasible)
      throw InfeasibleError("robust master infeasible");
    if (!sol.optimal())
      throw SolveError("robust master did not solve to optimality");

    result.x.assign(sol.values.begin(), sol.values.begin() + nx);
    result.master_objective = sol.objective;
    result.iterations = static_cast<int>(iter);

    SubproblemResult sp = solve_subproblem(problem, result.x, opts.subproblem);
    result.trace.iterations.push_back({static_cast<int>(iter), sol.objective, sp.theta,
                                       sp.worst.v});
    result.trace.terminal_theta = sp.theta;

    if (sp.theta < opts.epsilon) {
      result.trace.converged = true;
      return result;
    }

    for (const auto& seen : result.scenarios) {
      bool same = seen.v.size() == sp.worst.v.size();
      for (std::size_t k = 0; same && k < seen.v.size(); ++k)
        same = std::abs(seen.v[k] - sp.worst.v[k]) < 1e-9;
      if (same)
        throw InvariantError(
            "worst-case scenario repeated with slack above tolerance; "
            "master and subproblem disagree");
    }
    result.scenarios.push_back(sp.worst);

    if (iter >= max_iter)
      throw SolveError("column-and-constraint generation did not converge within " +
                       std::to_string(max_iter) + " iterations; last slack " +
                       std::to_string(sp.theta));
  }
}

}  // namespace dispatch
