#include "dispatch/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dispatch {

using nlohmann::json;

double CostCurve::value(double p_min, double p) const {
  double total = constant_term;
  double lo = p_min;
  for (const auto& seg : segments) {
    double hi = std::min(p, seg.breakpoint);
    if (hi > lo) total += (hi - lo) * seg.marginal_cost;
    lo = seg.breakpoint;
    if (p <= seg.breakpoint) break;
  }
  return total;
}

double CostCurve::max_marginal() const {
  double m = 0.0;
  for (const auto& seg : segments) m = std::max(m, seg.marginal_cost);
  return m;
}

int PowerSystem::bus_index(const std::string& name) const {
  for (size_t i = 0; i < buses.size(); ++i) {
    if (buses[i] == name) return static_cast<int>(i);
  }
  throw TopologyError("undeclared bus '" + name + "'");
}

double PowerSystem::total_load() const {
  double t = 0.0;
  for (double d : loads) t += d;
  return t;
}

std::vector<int> PowerSystem::ccu_indices() const {
  std::vector<int> out;
  for (size_t i = 0; i < conventional_units.size(); ++i) {
    if (conventional_units[i].control_class == ControlClass::Ccu) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> PowerSystem::nccu_indices() const {
  std::vector<int> out;
  for (size_t i = 0; i < conventional_units.size(); ++i) {
    if (conventional_units[i].control_class == ControlClass::Nccu) out.push_back(static_cast<int>(i));
  }
  return out;
}

double PowerSystem::max_marginal_cost() const {
  double m = 0.0;
  for (const auto& u : conventional_units) m = std::max(m, u.cost.max_marginal());
  return m;
}

namespace {

bool finite(double x) { return std::isfinite(x); }

void check_unique_ids(const PowerSystem& s) {
  std::set<std::string> seen;
  for (const auto& b : s.buses) {
    if (!seen.insert("b:" + b).second) throw InvariantError("duplicate bus id '" + b + "'");
  }
  for (const auto& l : s.lines) {
    if (!seen.insert("l:" + l.id).second) throw InvariantError("duplicate line id '" + l.id + "'");
  }
  for (const auto& u : s.conventional_units) {
    if (!seen.insert("u:" + u.id).second) throw InvariantError("duplicate unit id '" + u.id + "'");
  }
  for (const auto& v : s.vrg_units) {
    if (!seen.insert("v:" + v.id).second) throw InvariantError("duplicate vrg id '" + v.id + "'");
  }
}

void check_connected(const PowerSystem& s) {
  if (s.buses.empty()) throw InvariantError("case declares no buses");
  std::vector<std::vector<int>> adj(s.buses.size());
  for (const auto& l : s.lines) {
    int a = s.bus_index(l.from_bus);
    int b = s.bus_index(l.to_bus);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(s.buses.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    for (int m : adj[n]) {
      if (!seen[m]) {
        seen[m] = 1;
        stack.push_back(m);
      }
    }
  }
  for (size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw TopologyError("network is disconnected: bus '" + s.buses[i] + "' unreachable");
  }
}

}  // namespace

void PowerSystem::validate() const {
  check_unique_ids(*this);
  bus_index(slack_bus);  // throws if the slack is undeclared
  if (loads.size() != buses.size()) throw DimensionError("loads not aligned with buses");
  for (size_t i = 0; i < loads.size(); ++i) {
    if (!finite(loads[i]) || loads[i] < 0.0) {
      throw InvariantError("negative or non-finite load at bus '" + buses[i] + "'");
    }
  }
  for (const auto& l : lines) {
    bus_index(l.from_bus);
    bus_index(l.to_bus);
    if (l.from_bus == l.to_bus) throw TopologyError("line '" + l.id + "' connects a bus to itself");
    if (!finite(l.reactance) || l.reactance <= 0.0) {
      throw InvariantError("line '" + l.id + "' needs a positive reactance");
    }
    if (!finite(l.capacity) || l.capacity <= 0.0) {
      throw InvariantError("line '" + l.id + "' needs a positive capacity");
    }
  }
  for (const auto& u : conventional_units) {
    bus_index(u.bus);
    if (!finite(u.p_min) || !finite(u.p_max) || u.p_min < 0.0 || u.p_min > u.p_max) {
      throw InvariantError("unit '" + u.id + "' violates 0 <= p_min <= p_max");
    }
    if (!finite(u.ramp) || u.ramp < 0.0) throw InvariantError("unit '" + u.id + "' has negative ramp");
    if (!finite(u.corrective_adjust) || u.corrective_adjust < 0.0) {
      throw InvariantError("unit '" + u.id + "' has negative corrective range");
    }
    if (!finite(u.p_current) || u.p_current < u.p_min - 1e-9 || u.p_current > u.p_max + 1e-9) {
      throw InvariantError("unit '" + u.id + "' current output outside [p_min, p_max]");
    }
    if (u.cost.segments.empty()) throw InvariantError("unit '" + u.id + "' has an empty cost curve");
    double prev = u.p_min;
    double prev_marg = -1.0;
    for (const auto& seg : u.cost.segments) {
      if (!finite(seg.breakpoint) || !finite(seg.marginal_cost)) {
        throw InvariantError("unit '" + u.id + "' has a non-finite cost segment");
      }
      if (seg.breakpoint <= prev + 1e-12 && !(u.p_min == u.p_max && seg.breakpoint == prev)) {
        throw InvariantError("unit '" + u.id + "' cost breakpoints must increase");
      }
      if (seg.marginal_cost < prev_marg - 1e-9) {
        throw InvariantError("unit '" + u.id + "' cost curve is not convex");
      }
      prev = seg.breakpoint;
      prev_marg = seg.marginal_cost;
    }
    if (std::abs(prev - u.p_max) > 1e-6 * std::max(1.0, std::abs(u.p_max))) {
      throw InvariantError("unit '" + u.id + "' cost segments must span up to p_max");
    }
  }
  for (const auto& v : vrg_units) {
    bus_index(v.bus);
    if (!finite(v.capacity) || v.capacity < 0.0) {
      throw InvariantError("vrg '" + v.id + "' has negative capacity");
    }
  }
  check_connected(*this);
}

namespace {

double require_finite_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where + " must be a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(where + " must be finite");
  return v;
}

std::string require_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw SchemaError(where + " must be a string");
  return j.get<std::string>();
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw SchemaError(where + ": unknown key '" + it.key() + "'");
  }
}

void require_keys(const json& obj, const std::set<std::string>& required, const std::string& where) {
  for (const auto& k : required) {
    if (!obj.contains(k)) throw SchemaError(where + ": missing key '" + k + "'");
  }
}

PowerSystem parse_case_json(const json& root) {
  if (!root.is_object()) throw SchemaError("case file must be a JSON object");
  const std::set<std::string> top = {"buses", "slack_bus", "lines", "units", "vrg", "loads"};
  reject_unknown_keys(root, top, "case");
  require_keys(root, top, "case");

  PowerSystem s;
  if (!root["buses"].is_array()) throw SchemaError("'buses' must be an array");
  for (const auto& b : root["buses"]) s.buses.push_back(require_string(b, "bus id"));
  s.slack_bus = require_string(root["slack_bus"], "'slack_bus'");

  if (!root["lines"].is_array()) throw SchemaError("'lines' must be an array");
  const std::set<std::string> line_keys = {"id", "from", "to", "reactance", "capacity"};
  for (const auto& jl : root["lines"]) {
    if (!jl.is_object()) throw SchemaError("each line must be an object");
    reject_unknown_keys(jl, line_keys, "line");
    require_keys(jl, line_keys, "line");
    Line l;
    l.id = require_string(jl["id"], "line id");
    l.from_bus = require_string(jl["from"], "line '" + l.id + "' from");
    l.to_bus = require_string(jl["to"], "line '" + l.id + "' to");
    l.reactance = require_finite_number(jl["reactance"], "line '" + l.id + "' reactance");
    l.capacity = require_finite_number(jl["capacity"], "line '" + l.id + "' capacity");
    s.lines.push_back(std::move(l));
  }

  if (!root["units"].is_array()) throw SchemaError("'units' must be an array");
  const std::set<std::string> unit_keys = {"id",   "bus",  "class",     "p_min", "p_max",
                                           "ramp", "delta", "p_current", "cost"};
  const std::set<std::string> cost_keys = {"constant", "segments"};
  for (const auto& ju : root["units"]) {
    if (!ju.is_object()) throw SchemaError("each unit must be an object");
    reject_unknown_keys(ju, unit_keys, "unit");
    require_keys(ju, unit_keys, "unit");
    ConventionalUnit u;
    u.id = require_string(ju["id"], "unit id");
    u.bus = require_string(ju["bus"], "unit '" + u.id + "' bus");
    std::string cls = require_string(ju["class"], "unit '" + u.id + "' class");
    if (cls == "CCU") {
      u.control_class = ControlClass::Ccu;
    } else if (cls == "NCCU") {
      u.control_class = ControlClass::Nccu;
    } else {
      throw SchemaError("unit '" + u.id + "' class must be 'CCU' or 'NCCU'");
    }
    u.p_min = require_finite_number(ju["p_min"], "unit '" + u.id + "' p_min");
    u.p_max = require_finite_number(ju["p_max"], "unit '" + u.id + "' p_max");
    u.ramp = require_finite_number(ju["ramp"], "unit '" + u.id + "' ramp");
    u.corrective_adjust = require_finite_number(ju["delta"], "unit '" + u.id + "' delta");
    u.p_current = require_finite_number(ju["p_current"], "unit '" + u.id + "' p_current");
    const json& jc = ju["cost"];
    if (!jc.is_object()) throw SchemaError("unit '" + u.id + "' cost must be an object");
    reject_unknown_keys(jc, cost_keys, "unit '" + u.id + "' cost");
    require_keys(jc, cost_keys, "unit '" + u.id + "' cost");
    u.cost.constant_term = require_finite_number(jc["constant"], "unit '" + u.id + "' cost constant");
    if (!jc["segments"].is_array() ) throw SchemaError("unit '" + u.id + "' cost segments must be an array");
    for (const auto& jseg : jc["segments"]) {
      if (!jseg.is_array() || jseg.size() != 2) {
        throw SchemaError("unit '" + u.id + "' cost segment must be [breakpoint, marginal_cost]");
      }
      CostSegment seg;
      seg.breakpoint = require_finite_number(jseg[0], "unit '" + u.id + "' segment breakpoint");
      seg.marginal_cost = require_finite_number(jseg[1], "unit '" + u.id + "' segment marginal cost");
      u.cost.segments.push_back(seg);
    }
    s.conventional_units.push_back(std::move(u));
  }

  if (!root["vrg"].is_array()) throw SchemaError("'vrg' must be an array");
  const std::set<std::string> vrg_keys = {"id", "bus", "capacity"};
  for (const auto& jv : root["vrg"]) {
    if (!jv.is_object()) throw SchemaError("each vrg entry must be an object");
    reject_unknown_keys(jv, vrg_keys, "vrg");
    require_keys(jv, vrg_keys, "vrg");
    VrgUnit v;
    v.id = require_string(jv["id"], "vrg id");
    v.bus = require_string(jv["bus"], "vrg '" + v.id + "' bus");
    v.capacity = require_finite_number(jv["capacity"], "vrg '" + v.id + "' capacity");
    s.vrg_units.push_back(std::move(v));
  }

  if (!root["loads"].is_object()) throw SchemaError("'loads' must map bus ids to MW");
  s.loads.assign(s.buses.size(), 0.0);
  for (auto it = root["loads"].begin(); it != root["loads"].end(); ++it) {
    int n = s.bus_index(it.key());  // TopologyError on unknown bus
    s.loads[n] = require_finite_number(it.value(), "load at bus '" + it.key() + "'");
  }

  s.validate();
  return s;
}

}  // namespace

PowerSystem parse_case_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("case file is not valid JSON: ") + e.what());
  }
  return parse_case_json(root);
}

PowerSystem load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open case file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_case_text(buf.str());
}

std::string case_to_json_text(const PowerSystem& s) {
  json root;
  root["buses"] = s.buses;
  root["slack_bus"] = s.slack_bus;
  root["lines"] = json::array();
  for (const auto& l : s.lines) {
    root["lines"].push_back({{"id", l.id},
                             {"from", l.from_bus},
                             {"to", l.to_bus},
                             {"reactance", l.reactance},
                             {"capacity", l.capacity}});
  }
  root["units"] = json::array();
  for (const auto& u : s.conventional_units) {
    json segs = json::array();
    for (const auto& seg : u.cost.segments) segs.push_back({seg.breakpoint, seg.marginal_cost});
    root["units"].push_back({{"id", u.id},
                             {"bus", u.bus},
                             {"class", u.control_class == ControlClass::Ccu ? "CCU" : "NCCU"},
                             {"p_min", u.p_min},
                             {"p_max", u.p_max},
                             {"ramp", u.ramp},
                             {"delta", u.corrective_adjust},
                             {"p_current", u.p_current},
                             {"cost", {{"constant", u.cost.constant_term}, {"segments", segs}}}});
  }
  root["vrg"] = json::array();
  for (const auto& v : s.vrg_units) {
    root["vrg"].push_back({{"id", v.id}, {"bus", v.bus}, {"capacity", v.capacity}});
  }
  json loads = json::object();
  for (size_t i = 0; i < s.buses.size(); ++i) loads[s.buses[i]] = s.loads[i];
  root["loads"] = loads;
  return root.dump(2);
}

ShiftFactorMatrix compute_shift_factors(const PowerSystem& system) {
  system.validate();
  const int nb = static_cast<int>(system.buses.size());
  const int nl = static_cast<int>(system.lines.size());
  const int slack = system.slack_index();

  // Column index for each non-slack bus in the reduced susceptance system.
  std::vector<int> red(nb, -1);
  int k = 0;
  for (int n = 0; n < nb; ++n) {
    if (n != slack) red[n] = k++;
  }
  const int m = nb - 1;

  ShiftFactorMatrix sf;
  sf.entries.assign(nl, std::vector<double>(nb, 0.0));
  if (nl == 0 || m == 0) return sf;

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
  for (const auto& l : system.lines) {
    double b = 1.0 / l.reactance;
    int f = system.bus_index(l.from_bus);
    int t = system.bus_index(l.to_bus);
    if (red[f] >= 0) B(red[f], red[f]) += b;
    if (red[t] >= 0) B(red[t], red[t]) += b;
    if (red[f] >= 0 && red[t] >= 0) {
      B(red[f], red[t]) -= b;
      B(red[t], red[f]) -= b;
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  // Connectivity was checked above; a near-singular factorization here means
  // the reactances are numerically degenerate.
  {
    Eigen::MatrixXd U = lu.matrixLU().triangularView<Eigen::Upper>();
    double dmin = 1e300, dmax = 0.0;
    for (int i = 0; i < m; ++i) {
      double d = std::abs(U(i, i));
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
    if (!(dmin > 0.0) || dmin < 1e-12 * std::max(1.0, dmax)) {
      throw InvariantError("singular reduced susceptance matrix");
    }
  }

  // theta column per injection bus: B * theta = e_n, then flows b_l (th_f - th_t).
  Eigen::MatrixXd theta = lu.solve(Eigen::MatrixXd::Identity(m, m));
  for (int li = 0; li < nl; ++li) {
    const auto& l = system.lines[li];
    double b = 1.0 / l.reactance;
    int f = system.bus_index(l.from_bus);
    int t = system.bus_index(l.to_bus);
    for (int n = 0; n < nb; ++n) {
      if (n == slack) continue;
      double th_f = (red[f] >= 0) ? theta(red[f], red[n]) : 0.0;
      double th_t = (red[t] >= 0) ? theta(red[t], red[n]) : 0.0;
      sf.entries[li][n] = b * (th_f - th_t);
    }
  }
  return sf;
}

std::vector<double> line_flows(const ShiftFactorMatrix& sf, const std::vector<double>& injections) {
  if (sf.line_count() > 0 && static_cast<int>(injections.size()) != sf.bus_count()) {
    throw DimensionError("injection vector not aligned with shift-factor matrix");
  }
  double net = 0.0;
  for (double x : injections) net += x;
  double scale = 0.0;
  for (double x : injections) scale = std::max(scale, std::abs(x));
  if (std::abs(net) > 1e-6 * std::max(1.0, scale)) {
    throw InvariantError("injections do not balance to zero");
  }
  std::vector<double> flows(sf.line_count(), 0.0);
  for (int l = 0; l < sf.line_count(); ++l) {
    double f = 0.0;
    for (int n = 0; n < sf.bus_count(); ++n) f += sf.entries[l][n] * injections[n];
    flows[l] = f;
  }
  return flows;
}

}  // namespace dispatch
