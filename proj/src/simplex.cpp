#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dispatch/solver.hpp"
#include "solver_internal.hpp"

// Bounded-variable revised simplex. Rows are slacked into equalities
// (A x + s = b with sense-dependent slack bounds), a phase-1 pass drives
// artificial variables out of rows whose slack cannot absorb the initial
// residual, and the basis inverse is kept as a dense LU plus a product-form
// eta file, refactorized periodically. Dantzig pricing with a permanent
// switch to Bland's rule after a degeneracy stall guarantees termination.

namespace dispatch {

int LinearProgram::add_variable(std::string name, double lower, double upper, double cost) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw InvariantError("variable '" + name + "' has invalid bounds");
  }
  if (!std::isfinite(cost)) throw InvariantError("variable '" + name + "' has a non-finite cost");
  if (index_.count(name)) throw InvariantError("duplicate variable '" + name + "'");
  int id = static_cast<int>(vars_.size());
  vars_.push_back(VariableDef{std::move(name), lower, upper, cost});
  index_.emplace(vars_.back().name, id);
  return id;
}

int LinearProgram::add_row(std::string name, std::vector<LinearTerm> terms, RowSense sense, double rhs) {
  if (!std::isfinite(rhs)) throw InvariantError("row '" + name + "' has a non-finite rhs");
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= num_variables()) throw DimensionError("row '" + name + "' references a missing variable");
    if (!std::isfinite(t.coef)) throw InvariantError("row '" + name + "' has a non-finite coefficient");
  }
  rows_.push_back(RowDef{std::move(name), std::move(terms), sense, rhs});
  return static_cast<int>(rows_.size()) - 1;
}

void LinearProgram::add_cost(int var, double delta) {
  if (var < 0 || var >= num_variables()) throw DimensionError("add_cost: missing variable");
  vars_[var].cost += delta;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
  if (var < 0 || var >= num_variables()) throw DimensionError("set_bounds: missing variable");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw InvariantError("set_bounds: invalid bounds for '" + vars_[var].name + "'");
  }
  vars_[var].lower = lower;
  vars_[var].upper = upper;
}

int LinearProgram::variable(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvariantError("unknown variable '" + name + "'");
  return it->second;
}

std::optional<int> LinearProgram::find_variable(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double Solution::value(const LinearProgram& lp, const std::string& name) const {
  int j = lp.variable(name);
  if (j >= static_cast<int>(values.size())) throw DimensionError("solution holds no value for '" + name + "'");
  return values[j];
}

namespace detail {

Core build_core(const LinearProgram& lp) {
  Core c;
  c.m = lp.num_rows();
  c.nstruct = lp.num_variables();
  const int ncols = c.nstruct + c.m;
  c.cols.assign(ncols, {});
  c.lo.assign(ncols, 0.0);
  c.up.assign(ncols, 0.0);
  c.cost.assign(ncols, 0.0);
  c.b.assign(c.m, 0.0);
  c.obj_sign = lp.objective_sense() == ObjSense::Maximize ? -1.0 : 1.0;
  c.obj_const = lp.objective_constant();
  for (int j = 0; j < c.nstruct; ++j) {
    const auto& v = lp.variables()[j];
    c.lo[j] = v.lower;
    c.up[j] = v.upper;
    c.cost[j] = c.obj_sign * v.cost;
  }
  // Duplicate terms within a row are combined so columns stay canonical.
  std::vector<double> acc(c.nstruct, 0.0);
  std::vector<int> stamp(c.nstruct, -1);
  std::vector<int> touched;
  for (int i = 0; i < c.m; ++i) {
    const auto& row = lp.rows()[i];
    c.b[i] = row.rhs;
    touched.clear();
    for (const auto& t : row.terms) {
      if (stamp[t.var] != i) {
        stamp[t.var] = i;
        acc[t.var] = 0.0;
        touched.push_back(t.var);
      }
      acc[t.var] += t.coef;
    }
    std::sort(touched.begin(), touched.end());
    for (int v : touched) {
      if (acc[v] != 0.0) c.cols[v].push_back({i, acc[v]});
    }
    const int s = c.nstruct + i;
    c.cols[s].push_back({i, 1.0});
    switch (row.sense) {
      case RowSense::Le: c.lo[s] = 0.0; c.up[s] = kInfinity; break;
      case RowSense::Ge: c.lo[s] = -kInfinity; c.up[s] = 0.0; break;
      case RowSense::Eq: c.lo[s] = 0.0; c.up[s] = 0.0; break;
    }
  }
  return c;
}

namespace {

enum class VState : std::uint8_t { Basic, AtLower, AtUpper, Free };

struct Eta {
  int r;
  Eigen::VectorXd w;
};

class Simplex {
 public:
  Simplex(const Core& core, const double* lo_struct, const double* up_struct, const SimplexOptions& opts)
      : core_(core), opts_(opts), m_(core.m), ncols_(core.nstruct + core.m) {
    lo_.assign(core_.lo.begin(), core_.lo.end());
    up_.assign(core_.up.begin(), core_.up.end());
    if (lo_struct) {
      for (int j = 0; j < core_.nstruct; ++j) {
        lo_[j] = lo_struct[j];
        up_[j] = up_struct[j];
      }
    }
    max_iter_ = opts.max_iterations > 0 ? opts.max_iterations : 2000 + 50L * (m_ + ncols_);
  }

  SolveStatus solve();

  double min_objective() const {
    double o = 0.0;
    for (int j = 0; j < ncols_; ++j) o += core_.cost[j] * x_[j];
    return o;
  }
  const std::vector<double>& x() const { return x_; }
  std::vector<double> row_duals() { return duals_; }
  std::vector<double> reduced_costs() { return dj_; }
  long iterations = 0;

 private:
  const Core& core_;
  SimplexOptions opts_;
  int m_, ncols_;
  long max_iter_ = 0;
  std::vector<double> lo_, up_;
  std::vector<double> cost1_;  // phase-1: unit cost on artificials
  std::vector<std::vector<std::pair<int, double>>> art_cols_;
  std::vector<VState> state_;
  std::vector<int> basic_;   // row -> column
  std::vector<double> x_;
  Eigen::MatrixXd bmat_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  std::vector<Eta> etas_;
  int pivots_since_refactor_ = 0;
  bool bland_ = false;
  int stall_ = 0;
  std::vector<double> duals_, dj_;

  int total_cols() const { return ncols_ + static_cast<int>(art_cols_.size()); }
  const std::vector<std::pair<int, double>>& col(int j) const {
    return j < ncols_ ? core_.cols[j] : art_cols_[j - ncols_];
  }
  double bound_for_start(int j) const {
    if (lo_[j] > -kInfinity) return lo_[j];
    if (up_[j] < kInfinity) return up_[j];
    return 0.0;
  }

  bool infeasible_box_ = false;
  void init();
  void refactor();
  void refresh_basics();
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v) const;
  Eigen::VectorXd dense_col(int j) const;
  SolveStatus run_phase(const std::vector<double>& cost, bool phase1);
  double phase1_objective() const;
};

void Simplex::init() {
  const int n = total_cols();
  state_.assign(n, VState::AtLower);
  x_.assign(ncols_, 0.0);
  for (int j = 0; j < ncols_; ++j) {
    if (lo_[j] > up_[j]) {
      infeasible_box_ = true;
      return;
    }
    if (lo_[j] > -kInfinity) {
      state_[j] = VState::AtLower;
      x_[j] = lo_[j];
    } else if (up_[j] < kInfinity) {
      state_[j] = VState::AtUpper;
      x_[j] = up_[j];
    } else {
      state_[j] = VState::Free;
      x_[j] = 0.0;
    }
  }
  basic_.assign(m_, -1);
  // Residual each row must carry once structural nonbasics sit at their bounds.
  std::vector<double> resid(core_.b);
  for (int j = 0; j < core_.nstruct; ++j) {
    if (x_[j] == 0.0) continue;
    for (const auto& [i, a] : core_.cols[j]) resid[i] -= a * x_[j];
  }
  for (int i = 0; i < m_; ++i) {
    const int s = core_.nstruct + i;
    double r = resid[i];
    if (r >= lo_[s] && r <= up_[s]) {
      basic_[i] = s;
      state_[s] = VState::Basic;
      x_[s] = r;
    } else {
      double clamped = std::min(std::max(r, lo_[s]), up_[s]);
      x_[s] = clamped;
      state_[s] = (clamped == lo_[s]) ? VState::AtLower : VState::AtUpper;
      double sign = (r > clamped) ? 1.0 : -1.0;
      art_cols_.push_back({{i, sign}});
      lo_.push_back(0.0);
      up_.push_back(kInfinity);
      x_.push_back(std::abs(r - clamped));
      state_.push_back(VState::Basic);
      basic_[i] = ncols_ + static_cast<int>(art_cols_.size()) - 1;
    }
  }
  cost1_.assign(total_cols(), 0.0);
  for (int k = 0; k < static_cast<int>(art_cols_.size()); ++k) cost1_[ncols_ + k] = 1.0;
  refactor();
}

void Simplex::refactor() {
  bmat_.setZero(m_, m_);
  for (int i = 0; i < m_; ++i) {
    for (const auto& [r, a] : col(basic_[i])) bmat_(r, i) = a;
  }
  lu_.compute(bmat_);
  double dmin = kInfinity, dmax = 0.0;
  for (int i = 0; i < m_; ++i) {
    double d = std::abs(lu_.matrixLU()(i, i));
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  if (!(dmin > 1e-13 * std::max(1.0, dmax))) throw SolveError("simplex basis became singular");
  etas_.clear();
  pivots_since_refactor_ = 0;
}

void Simplex::refresh_basics() {
  Eigen::VectorXd rhs(m_);
  for (int i = 0; i < m_; ++i) rhs[i] = core_.b[i];
  for (int j = 0; j < total_cols(); ++j) {
    if (state_[j] == VState::Basic || x_[j] == 0.0) continue;
    for (const auto& [i, a] : col(j)) rhs[i] -= a * x_[j];
  }
  ftran(rhs);
  for (int i = 0; i < m_; ++i) x_[basic_[i]] = rhs[i];
}

void Simplex::ftran(Eigen::VectorXd& v) const {
  v = lu_.solve(v);
  for (const auto& e : etas_) {
    double vr = v[e.r] / e.w[e.r];
    v -= vr * e.w;
    v[e.r] = vr;
  }
}

void Simplex::btran(Eigen::VectorXd& v) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    // v_r <- (v_r - sum_{i != r} w_i v_i) / w_r, other components unchanged
    const double wr = it->w[it->r];
    const double dot = it->w.dot(v);
    v[it->r] = (v[it->r] - (dot - wr * v[it->r])) / wr;
  }
  Eigen::VectorXd s = lu_.matrixLU().triangularView<Eigen::Upper>().transpose().solve(v);
  Eigen::VectorXd t = lu_.matrixLU().triangularView<Eigen::UnitLower>().transpose().solve(s);
  v = lu_.permutationP().transpose() * t;
}

Eigen::VectorXd Simplex::dense_col(int j) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m_);
  for (const auto& [i, a] : col(j)) v[i] = a;
  return v;
}

double Simplex::phase1_objective() const {
  double o = 0.0;
  for (int k = 0; k < static_cast<int>(art_cols_.size()); ++k) o += x_[ncols_ + k];
  return o;
}

SolveStatus Simplex::run_phase(const std::vector<double>& cost, bool phase1) {
  const double dual_tol = opts_.dual_tol;
  while (true) {
    if (iterations >= max_iter_) return SolveStatus::IterationLimit;
    ++iterations;
    if (pivots_since_refactor_ >= opts_.refactor_interval) {
      refactor();
      refresh_basics();
    }

    Eigen::VectorXd y(m_);
    for (int i = 0; i < m_; ++i) y[i] = cost[basic_[i]];
    btran(y);

    int enter = -1;
    double enter_d = 0.0, best_score = dual_tol;
    for (int j = 0; j < total_cols(); ++j) {
      if (state_[j] == VState::Basic || lo_[j] == up_[j]) continue;
      double d = cost[j];
      for (const auto& [i, a] : col(j)) d -= y[i] * a;
      double score;
      switch (state_[j]) {
        case VState::AtLower: score = -d; break;
        case VState::AtUpper: score = d; break;
        default: score = std::abs(d); break;
      }
      if (score > best_score) {
        enter = j;
        enter_d = d;
        best_score = score;
        if (bland_) break;  // first eligible index
      }
    }
    if (enter < 0) return SolveStatus::Optimal;

    double sigma;
    if (state_[enter] == VState::AtLower) sigma = 1.0;
    else if (state_[enter] == VState::AtUpper) sigma = -1.0;
    else sigma = enter_d < 0.0 ? 1.0 : -1.0;

    Eigen::VectorXd alpha = dense_col(enter);
    ftran(alpha);

    // Ratio test: the entering variable moves by sigma*t, basics by -sigma*t*alpha.
    double span = up_[enter] - lo_[enter];  // inf when either bound is open
    double t_min = span;
    for (int i = 0; i < m_; ++i) {
      double step = sigma * alpha[i];
      if (std::abs(step) <= 1e-9) continue;
      int bj = basic_[i];
      double t;
      if (step > 0.0) {
        if (lo_[bj] <= -kInfinity) continue;
        t = (x_[bj] - lo_[bj]) / step;
      } else {
        if (up_[bj] >= kInfinity) continue;
        t = (x_[bj] - up_[bj]) / step;
      }
      if (t < t_min) t_min = t;
    }
    if (t_min >= kInfinity) {
      if (phase1) throw SolveError("phase-1 subproblem unbounded (internal)");
      return SolveStatus::Unbounded;
    }
    if (t_min < 0.0) t_min = 0.0;

    // Leaving choice among blockers near the minimum ratio: largest pivot wins,
    // lowest variable index under Bland's rule.
    int leave_row = -1;
    double best_piv = 0.0;
    for (int i = 0; i < m_; ++i) {
      double step = sigma * alpha[i];
      if (std::abs(step) <= 1e-9) continue;
      int bj = basic_[i];
      double t;
      if (step > 0.0) {
        if (lo_[bj] <= -kInfinity) continue;
        t = (x_[bj] - lo_[bj]) / step;
      } else {
        if (up_[bj] >= kInfinity) continue;
        t = (x_[bj] - up_[bj]) / step;
      }
      if (t <= t_min + 1e-9) {
        if (bland_) {
          if (leave_row < 0 || bj < basic_[leave_row]) leave_row = i;
        } else if (std::abs(alpha[i]) > best_piv) {
          best_piv = std::abs(alpha[i]);
          leave_row = i;
        }
      }
    }

    // t_min <= span by construction; on a near-tie prefer the bound flip
    // (no basis change). leave_row is always set when a basic binds first.
    bool flip = (span < kInfinity && span <= t_min + 1e-9);
    double t = flip ? span : t_min;

    if (t > 1e-12) stall_ = 0;
    else if (++stall_ > 600 && !bland_) bland_ = true;

    for (int i = 0; i < m_; ++i) {
      double step = sigma * alpha[i];
      if (step != 0.0) x_[basic_[i]] -= t * step;
    }

    if (flip) {
      state_[enter] = (sigma > 0.0) ? VState::AtUpper : VState::AtLower;
      x_[enter] = (sigma > 0.0) ? up_[enter] : lo_[enter];
      continue;
    }

    if (leave_row < 0) return SolveStatus::IterationLimit;  // defensive; cannot happen
    int leave = basic_[leave_row];
    double step_leave = sigma * alpha[leave_row];
    if (step_leave > 0.0) {
      state_[leave] = VState::AtLower;
      x_[leave] = lo_[leave];
    } else {
      state_[leave] = VState::AtUpper;
      x_[leave] = up_[leave];
    }
    double entered_value = x_[enter] + sigma * t;
    state_[enter] = VState::Basic;
    basic_[leave_row] = enter;
    x_[enter] = entered_value;

    if (std::abs(alpha[leave_row]) < 1e-10) {
      refactor();
      refresh_basics();
    } else {
      etas_.push_back(Eta{leave_row, std::move(alpha)});
      ++pivots_since_refactor_;
    }
  }
}

SolveStatus Simplex::solve() {
  if (m_ == 0) {
    // Pure box problem: every variable sits at its favorable finite bound.
    x_.assign(ncols_, 0.0);
    for (int j = 0; j < ncols_; ++j) {
      if (lo_[j] > up_[j]) return SolveStatus::Infeasible;
      double c = core_.cost[j];
      if (c > 0.0) {
        if (lo_[j] <= -kInfinity) return SolveStatus::Unbounded;
        x_[j] = lo_[j];
      } else if (c < 0.0) {
        if (up_[j] >= kInfinity) return SolveStatus::Unbounded;
        x_[j] = up_[j];
      } else {
        x_[j] = bound_for_start(j);
      }
    }
    duals_.clear();
    dj_.assign(ncols_, 0.0);
    for (int j = 0; j < ncols_; ++j) dj_[j] = core_.cost[j];
    return SolveStatus::Optimal;
  }

  init();
  if (infeasible_box_) return SolveStatus::Infeasible;

  if (!art_cols_.empty()) {
    SolveStatus s1 = run_phase(cost1_, true);
    if (s1 == SolveStatus::IterationLimit) return s1;
    if (phase1_objective() > std::max(opts_.feas_tol, 1e-9)) return SolveStatus::Infeasible;
    for (int k = 0; k < static_cast<int>(art_cols_.size()); ++k) {
      int j = ncols_ + k;
      lo_[j] = 0.0;
      up_[j] = 0.0;
      if (state_[j] != VState::Basic) {
        state_[j] = VState::AtLower;
        x_[j] = 0.0;
      }
    }
  }

  std::vector<double> cost2(total_cols(), 0.0);
  for (int j = 0; j < ncols_; ++j) cost2[j] = core_.cost[j];
  SolveStatus s2 = run_phase(cost2, false);
  if (s2 != SolveStatus::Optimal) return s2;

  refactor();
  refresh_basics();

  // Honest-failure check: a returned Optimal must actually satisfy the box.
  for (int j = 0; j < total_cols(); ++j) {
    if (x_[j] < lo_[j] - opts_.feas_tol * 10 || x_[j] > up_[j] + opts_.feas_tol * 10) {
      SolveStatus retry = run_phase(cost2, false);
      if (retry != SolveStatus::Optimal) return retry;
      refactor();
      refresh_basics();
      break;
    }
  }
  for (int j = 0; j < total_cols(); ++j) {
    if (x_[j] < lo_[j] - opts_.feas_tol * 100 || x_[j] > up_[j] + opts_.feas_tol * 100) {
      return SolveStatus::IterationLimit;
    }
  }

  Eigen::VectorXd y(m_);
  for (int i = 0; i < m_; ++i) y[i] = cost2[basic_[i]];
  btran(y);
  duals_.assign(m_, 0.0);
  for (int i = 0; i < m_; ++i) duals_[i] = y[i];
  dj_.assign(ncols_, 0.0);
  for (int j = 0; j < ncols_; ++j) {
    double d = cost2[j];
    for (const auto& [i, a] : col(j)) d -= y[i] * a;
    dj_[j] = d;
  }
  return SolveStatus::Optimal;
}

}  // namespace

SolveStatus solve_core(const Core& core, const double* lo_struct, const double* up_struct,
                       const SimplexOptions& opts, CoreSolution& out) {
  Simplex s(core, lo_struct, up_struct, opts);
  SolveStatus st = s.solve();
  out.iterations = s.iterations;
  if (st == SolveStatus::Optimal) {
    out.min_objective = s.min_objective();
    out.x.assign(s.x().begin(), s.x().begin() + core.nstruct + core.m);
    out.duals = s.row_duals();
    out.reduced_costs = s.reduced_costs();
  } else {
    out.min_objective = 0.0;
    out.x.clear();
    out.duals.clear();
    out.reduced_costs.clear();
  }
  return st;
}

}  // namespace detail

Solution solve_lp(const LinearProgram& lp, const SimplexOptions& opts) {
  if (detail::lp_dump_enabled()) {
    MixedIntegerProgram probe;
    probe.base = lp;
    maybe_dump_lp(probe, "lp");
  }
  detail::Core core = detail::build_core(lp);
  detail::CoreSolution cs;
  SolveStatus st = detail::solve_core(core, nullptr, nullptr, opts, cs);
  Solution s;
  s.status = st;
  if (st == SolveStatus::Optimal) {
    s.objective = core.obj_sign * cs.min_objective + core.obj_const;
    s.values.assign(cs.x.begin(), cs.x.begin() + core.nstruct);
    s.duals.resize(core.m);
    for (int i = 0; i < core.m; ++i) s.duals[i] = core.obj_sign * cs.duals[i];
    s.reduced_costs.resize(core.nstruct);
    for (int j = 0; j < core.nstruct; ++j) s.reduced_costs[j] = core.obj_sign * cs.reduced_costs[j];
  }
  return s;
}

}  // namespace dispatch
