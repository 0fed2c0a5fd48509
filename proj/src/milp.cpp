#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "dispatch/solver.hpp"
#include "solver_internal.hpp"

namespace dispatch {

namespace {

using detail::Core;
using detail::CoreSolution;

// Open node of the search tree. `bound` is the parent relaxation value in
// minimization form, so the best-first queue pops the most promising node.
struct Node {
  double bound = -kInfinity;
  long id = 0;
  std::vector<double> lo, up;  // structural bounds
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

std::vector<int> checked_integrals(const MixedIntegerProgram& mip) {
  std::vector<int> ints = mip.integral;
  std::sort(ints.begin(), ints.end());
  ints.erase(std::unique(ints.begin(), ints.end()), ints.end());
  const auto& vars = mip.base.variables();
  for (int j : ints) {
    if (j < 0 || j >= static_cast<int>(vars.size()))
      throw InvariantError("integral variable index out of range");
    if (vars[j].lower < -1e-9 || vars[j].upper > 1.0 + 1e-9)
      throw InvariantError("integral variable '" + vars[j].name +
                           "' must have bounds within [0, 1]");
  }
  return ints;
}

double fractionality(double x) {
  double f = x - std::floor(x);
  return std::min(f, 1.0 - f);
}

double unbounded_objective(const Core& core) {
  return core.obj_sign > 0.0 ? -kInfinity : kInfinity;
}

// Vets a candidate assignment against bounds, integrality and every row.
// Used for incumbent hints only; optimality never depends on it.
bool assignment_feasible(const LinearProgram& lp, const std::vector<int>& ints,
                         const std::vector<double>& x, double int_tol) {
  if (static_cast<int>(x.size()) != lp.num_variables()) return false;
  const auto& vars = lp.variables();
  for (int j = 0; j < lp.num_variables(); ++j) {
    if (!std::isfinite(x[j])) return false;
    if (x[j] < vars[j].lower - 1e-7 || x[j] > vars[j].upper + 1e-7) return false;
  }
  for (int j : ints)
    if (fractionality(x[j]) > int_tol) return false;
  for (const auto& row : lp.rows()) {
    double acc = 0.0;
    for (const auto& t : row.terms) acc += t.coef * x[t.var];
    const double tol = 1e-6 * (1.0 + std::abs(row.rhs));
    if (row.sense == RowSense::Le && acc > row.rhs + tol) return false;
    if (row.sense == RowSense::Ge && acc < row.rhs - tol) return false;
    if (row.sense == RowSense::Eq && std::abs(acc - row.rhs) > tol) return false;
  }
  return true;
}

double min_form_objective(const Core& core, const std::vector<double>& x_struct) {
  double acc = 0.0;
  for (int j = 0; j < core.nstruct; ++j) acc += core.cost[j] * x_struct[j];
  return acc;
}

}  // namespace

Solution solve_milp(const MixedIntegerProgram& mip, const MilpOptions& opts) {
  maybe_dump_lp(mip, "milp");
  const std::vector<int> ints = checked_integrals(mip);
  if (ints.empty()) return solve_lp(mip.base, opts.lp);

  const Core core = detail::build_core(mip.base);

  bool have_inc = false;
  double inc_obj = kInfinity;  // minimization form
  std::vector<double> inc_x;
  if (opts.incumbent_hint &&
      assignment_feasible(mip.base, ints, *opts.incumbent_hint, opts.int_tol)) {
    have_inc = true;
    inc_x = *opts.incumbent_hint;
    inc_obj = min_form_objective(core, inc_x);
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  {
    Node root;
    root.id = next_id++;
    root.lo.assign(core.lo.begin(), core.lo.begin() + core.nstruct);
    root.up.assign(core.up.begin(), core.up.begin() + core.nstruct);
    open.push(std::move(root));
  }

  long processed = 0;
  bool exhausted_cleanly = true;

  while (!open.empty()) {
    Node node = open.top();
    open.pop();

    if (have_inc) {
      const double prune_eps = 1e-10 * (1.0 + std::abs(inc_obj));
      const double gap = (inc_obj - node.bound) / std::max(1.0, std::abs(inc_obj));
      // Best-first order: once the best open bound cannot beat the incumbent
      // (or sits inside the gap tolerance), no open node can.
      if (node.bound >= inc_obj - prune_eps || gap <= opts.gap_tol) break;
    }
    if (processed >= opts.node_budget) {
      exhausted_cleanly = false;
      break;
    }
    ++processed;

    CoreSolution rel;
    const SolveStatus st =
        detail::solve_core(core, node.lo.data(), node.up.data(), opts.lp, rel);
    if (st == SolveStatus::Infeasible) continue;
    if (st == SolveStatus::Unbounded) {
      Solution out;
      out.status = SolveStatus::Unbounded;
      out.objective = unbounded_objective(core);
      out.nodes = processed;
      return out;
    }
    if (st == SolveStatus::IterationLimit) {
      exhausted_cleanly = false;
      break;
    }

    if (have_inc) {
      const double prune_eps = 1e-10 * (1.0 + std::abs(inc_obj));
      if (rel.min_objective >= inc_obj - prune_eps) continue;
    }

    int branch_var = -1;
    double worst = opts.int_tol;
    for (int j : ints) {
      const double f = fractionality(rel.x[j]);
      if (f > worst) {
        worst = f;
        branch_var = j;
      }
    }

    if (branch_var < 0) {
      if (!have_inc || rel.min_objective < inc_obj) {
        have_inc = true;
        inc_obj = rel.min_objective;
        inc_x.assign(rel.x.begin(), rel.x.begin() + core.nstruct);
      }
      continue;
    }

    if (node.lo[branch_var] <= opts.int_tol) {
      Node down;
      down.bound = rel.min_objective;
      down.id = next_id++;
      down.lo = node.lo;
      down.up = node.up;
      down.up[branch_var] = 0.0;
      open.push(std::move(down));
    }
    if (node.up[branch_var] >= 1.0 - opts.int_tol) {
      Node up;
      up.bound = rel.min_objective;
      up.id = next_id++;
      up.lo = std::move(node.lo);
      up.up = std::move(node.up);
      up.lo[branch_var] = 1.0;
      open.push(std::move(up));
    }
  }

  Solution out;
  out.nodes = processed;
  if (!exhausted_cleanly) {
    out.status = SolveStatus::IterationLimit;
    if (have_inc) {
      out.objective = core.obj_sign * inc_obj + core.obj_const;
      out.values = std::move(inc_x);
    }
    return out;
  }
  if (!have_inc) {
    out.status = SolveStatus::Infeasible;
    return out;
  }
  out.status = SolveStatus::Optimal;
  out.objective = core.obj_sign * inc_obj + core.obj_const;
  out.values = std::move(inc_x);
  return out;
}

Solution solve_milp(const MixedIntegerProgram& mip, double gap_tol) {
  MilpOptions opts;
  opts.gap_tol = gap_tol;
  return solve_milp(mip, opts);
}

Solution brute_force_milp(const MixedIntegerProgram& mip, const SimplexOptions& opts) {
  const std::vector<int> ints = checked_integrals(mip);
  if (ints.size() > 20)
    throw InvariantError("brute_force_milp: more than 20 binary variables");

  const Core core = detail::build_core(mip.base);
  std::vector<double> lo(core.lo.begin(), core.lo.begin() + core.nstruct);
  std::vector<double> up(core.up.begin(), core.up.begin() + core.nstruct);

  bool have = false;
  double best = kInfinity;  // minimization form
  std::vector<double> best_x;
  long solved = 0;

  const std::uint64_t total = std::uint64_t{1} << ints.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    bool assignable = true;
    for (std::size_t t = 0; t < ints.size(); ++t) {
      const double v = ((mask >> t) & 1u) ? 1.0 : 0.0;
      const int j = ints[t];
      if (v < core.lo[j] - 1e-9 || v > core.up[j] + 1e-9) {
        assignable = false;
        break;
      }
      lo[j] = v;
      up[j] = v;
    }
    if (!assignable) continue;

    CoreSolution rel;
    const SolveStatus st = detail::solve_core(core, lo.data(), up.data(), opts, rel);
    ++solved;
    if (st == SolveStatus::Unbounded) {
      Solution out;
      out.status = SolveStatus::Unbounded;
      out.objective = unbounded_objective(core);
      out.nodes = solved;
      return out;
    }
    if (st == SolveStatus::IterationLimit)
      throw SolveError("brute_force_milp: enumeration subproblem hit the iteration limit");
    if (st == SolveStatus::Optimal && (!have || rel.min_objective < best)) {
      have = true;
      best = rel.min_objective;
      best_x.assign(rel.x.begin(), rel.x.begin() + core.nstruct);
    }
  }

  Solution out;
  out.nodes = solved;
  if (!have) {
    out.status = SolveStatus::Infeasible;
    return out;
  }
  out.status = SolveStatus::Optimal;
  out.objective = core.obj_sign * best + core.obj_const;
  out.values = std::move(best_x);
  return out;
}

}  // namespace dispatch
