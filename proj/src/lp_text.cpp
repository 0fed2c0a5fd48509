#include <atomic>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "dispatch/solver.hpp"
#include "solver_internal.hpp"

namespace dispatch {

namespace {

// LP-format identifiers: keep [A-Za-z0-9_], force a leading letter, and make
// the result unique so a mangled name cannot collide with another one.
std::vector<std::string> sanitized_names(const std::vector<std::string>& raw, char prefix) {
  std::vector<std::string> out;
  out.reserve(raw.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::string s;
    for (char c : raw[i]) {
      const unsigned char u = static_cast<unsigned char>(c);
      s.push_back(std::isalnum(u) || c == '_' ? c : '_');
    }
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0])))
      s.insert(s.begin(), prefix);
    if (!seen.insert(s).second) {
      std::string base = s;
      int k = 2;
      do {
        s = base + "_" + std::to_string(k++);
      } while (!seen.insert(s).second);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_linear(std::ostream& out, const std::map<int, double>& terms,
                  const std::vector<std::string>& names) {
  bool first = true;
  for (const auto& [var, coef] : terms) {
    if (coef == 0.0) continue;
    if (first) {
      out << (coef < 0.0 ? "- " : "");
      first = false;
    } else {
      out << (coef < 0.0 ? " - " : " + ");
    }
    out << std::abs(coef) << " " << names[var];
  }
  if (first) out << "0 " << (names.empty() ? std::string("none") : names[0]);
}

}  // namespace

void write_lp_text(const MixedIntegerProgram& mip, std::ostream& out, const std::string& name) {
  const LinearProgram& lp = mip.base;

  std::vector<std::string> raw_vars, raw_rows;
  raw_vars.reserve(lp.num_variables());
  for (const auto& v : lp.variables()) raw_vars.push_back(v.name);
  raw_rows.reserve(lp.num_rows());
  for (const auto& r : lp.rows()) raw_rows.push_back(r.name);
  const std::vector<std::string> vnames = sanitized_names(raw_vars, 'x');
  const std::vector<std::string> rnames = sanitized_names(raw_rows, 'c');

  out << std::setprecision(17);
  out << "\\ Problem: " << name << "\n";
  out << (lp.objective_sense() == ObjSense::Maximize ? "Maximize" : "Minimize") << "\n";

  std::map<int, double> obj;
  for (int j = 0; j < lp.num_variables(); ++j)
    if (lp.variables()[j].cost != 0.0) obj[j] = lp.variables()[j].cost;
  out << " obj: ";
  write_linear(out, obj, vnames);
  if (lp.objective_constant() != 0.0) {
    const double c = lp.objective_constant();
    out << (c < 0.0 ? " - " : " + ") << std::abs(c);
  }
  out << "\n";

  out << "Subject To\n";
  for (int i = 0; i < lp.num_rows(); ++i) {
    const RowDef& row = lp.rows()[i];
    std::map<int, double> terms;
    for (const auto& t : row.terms) terms[t.var] += t.coef;
    out << " " << rnames[i] << ": ";
    write_linear(out, terms, vnames);
    switch (row.sense) {
      case RowSense::Le: out << " <= "; break;
      case RowSense::Ge: out << " >= "; break;
      case RowSense::Eq: out << " = "; break;
    }
    out << row.rhs << "\n";
  }

  out << "Bounds\n";
  for (int j = 0; j < lp.num_variables(); ++j) {
    const VariableDef& v = lp.variables()[j];
    if (v.lower == -kInfinity && v.upper == kInfinity) {
      out << " " << vnames[j] << " free\n";
    } else if (v.lower == v.upper) {
      out << " " << vnames[j] << " = " << v.lower << "\n";
    } else {
      out << " ";
      if (v.lower == -kInfinity)
        out << "-inf";
      else
        out << v.lower;
      out << " <= " << vnames[j] << " <= ";
      if (v.upper == kInfinity)
        out << "+inf";
      else
        out << v.upper;
      out << "\n";
    }
  }

  if (!mip.integral.empty()) {
    out << "Binaries\n";
    std::unordered_set<int> listed;
    out << " ";
    bool first = true;
    for (int j : mip.integral) {
      if (j < 0 || j >= lp.num_variables()) continue;
      if (!listed.insert(j).second) continue;
      if (!first) out << " ";
      out << vnames[j];
      first = false;
    }
    out << "\n";
  }

  out << "End\n";
}

namespace detail {
bool lp_dump_enabled() {
  const char* dir = std::getenv("DISPATCH_LP_DUMP");
  return dir != nullptr && *dir != '\0';
}
}  // namespace detail

void maybe_dump_lp(const MixedIntegerProgram& mip, const std::string& name) {
  const char* dir = std::getenv("DISPATCH_LP_DUMP");
  if (dir == nullptr || *dir == '\0') return;
  static std::atomic<long> seq{0};
  const long n = seq.fetch_add(1);
  const std::filesystem::path path =
      std::filesystem::path(dir) / (name + "_" + std::to_string(n) + ".lp");
  std::ofstream out(path);
  if (!out) return;  // dumps are best effort, never fail the solve
  write_lp_text(mip, out, name);
}

}  // namespace dispatch
