#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dispatch/sampling.hpp"

namespace dispatch {

namespace {

void check_vector_size(const std::vector<double>& v, std::size_t want, const char* what) {
  if (v.size() != want)
    throw DimensionError(std::string(what) + ": expected " + std::to_string(want) +
                         " entries, got " + std::to_string(v.size()));
}

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_mw(const std::string& token, const std::string& where) {
  if (token.empty()) throw SchemaError(where + ": empty numeric field");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw SchemaError(where + ": not a number: '" + token + "'");
  }
  if (used != token.size()) throw SchemaError(where + ": trailing characters in '" + token + "'");
  if (!std::isfinite(v)) throw SchemaError(where + ": non-finite value");
  return v;
}

std::string format_mw(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::vector<double> vrg_capacities(const PowerSystem& system) {
  std::vector<double> caps;
  caps.reserve(system.vrg_units.size());
  for (const auto& v : system.vrg_units) caps.push_back(v.capacity);
  return caps;
}

SampleSet select_samples(const std::vector<HistoryRecord>& history,
                         const std::vector<double>& upcoming_forecast, int n) {
  if (history.empty()) throw InvariantError("select_samples: empty history");
  if (n < 1) throw InvariantError("select_samples: sample count must be at least 1");
  const std::size_t dim = upcoming_forecast.size();

  struct Key {
    double dist2;
    const std::string* ts;
    int idx;
  };
  std::vector<Key> keys;
  keys.reserve(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) {
    const HistoryRecord& rec = history[i];
    check_vector_size(rec.forecast, dim, "history forecast");
    check_vector_size(rec.error, dim, "history error");
    double d2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = rec.forecast[j] - upcoming_forecast[j];
      d2 += d * d;
    }
    keys.push_back({d2, &rec.timestamp, static_cast<int>(i)});
  }

  const auto take = static_cast<std::size_t>(std::min<std::size_t>(history.size(), n));
  auto before = [](const Key& a, const Key& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    if (*a.ts != *b.ts) return *a.ts < *b.ts;
    return a.idx < b.idx;
  };
  std::partial_sort(keys.begin(), keys.begin() + take, keys.end(), before);

  SampleSet out;
  out.origin_forecast = upcoming_forecast;
  out.indices.reserve(take);
  out.errors.reserve(take);
  for (std::size_t t = 0; t < take; ++t) {
    out.indices.push_back(keys[t].idx);
    out.errors.push_back(history[keys[t].idx].error);
  }
  return out;
}

std::vector<double> clip_sample(const std::vector<double>& error,
                                const std::vector<double>& upcoming_forecast,
                                const std::vector<double>& capacities) {
  const std::size_t dim = upcoming_forecast.size();
  check_vector_size(error, dim, "sample error");
  check_vector_size(capacities, dim, "capacities");
  std::vector<double> out(dim);
  for (std::size_t j = 0; j < dim; ++j)
    out[j] = clamp(upcoming_forecast[j] + error[j], 0.0, capacities[j]) - upcoming_forecast[j];
  return out;
}

SampleSet clip_sample_set(SampleSet samples, const std::vector<double>& capacities) {
  for (auto& e : samples.errors) e = clip_sample(e, samples.origin_forecast, capacities);
  return samples;
}

std::vector<HistoryRecord> load_history_csv(const std::string& path, const PowerSystem& system) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open wind history file '" + path + "'");
  const std::size_t nv = system.vrg_units.size();

  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": missing header row");
  const std::vector<std::string> header = split_csv_line(line);

  std::vector<std::string> want = {"timestamp"};
  for (const auto& v : system.vrg_units) want.push_back("forecast_" + v.id);
  for (const auto& v : system.vrg_units) want.push_back("error_" + v.id);
  bool with_observed = header.size() == want.size() + nv;
  if (with_observed)
    for (const auto& v : system.vrg_units) want.push_back("observed_" + v.id);
  if (header != want) {
    std::string expect;
    for (std::size_t i = 0; i < want.size(); ++i) expect += (i ? "," : "") + want[i];
    throw SchemaError(path + ": header must be exactly '" + expect + "'");
  }

  std::vector<HistoryRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (f.size() != want.size())
      throw SchemaError(where + ": expected " + std::to_string(want.size()) + " fields, got " +
                        std::to_string(f.size()));
    HistoryRecord rec;
    rec.timestamp = f[0];
    if (rec.timestamp.empty()) throw SchemaError(where + ": empty timestamp");
    for (std::size_t j = 0; j < nv; ++j) rec.forecast.push_back(parse_mw(f[1 + j], where));
    for (std::size_t j = 0; j < nv; ++j) rec.error.push_back(parse_mw(f[1 + nv + j], where));
    if (with_observed)
      for (std::size_t j = 0; j < nv; ++j) rec.observed.push_back(parse_mw(f[1 + 2 * nv + j], where));

    for (std::size_t j = 0; j < nv; ++j) {
      const double cap = system.vrg_units[j].capacity;
      const double tol = 1e-6 * std::max(1.0, cap);
      if (rec.forecast[j] < -tol || rec.forecast[j] > cap + tol)
        throw SchemaError(where + ": forecast for '" + system.vrg_units[j].id +
                          "' outside [0, capacity]");
      const double implied = rec.forecast[j] + rec.error[j];
      if (implied < -tol || implied > cap + tol)
        throw SchemaError(where + ": error for '" + system.vrg_units[j].id +
                          "' implies output outside [0, capacity]");
      if (with_observed && std::abs(rec.observed[j] - implied) > tol)
        throw SchemaError(where + ": observed for '" + system.vrg_units[j].id +
                          "' disagrees with forecast+error");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_history_csv(const std::string& path, const std::vector<HistoryRecord>& records,
                       const PowerSystem& system) {
  const std::size_t nv = system.vrg_units.size();
  bool with_observed = !records.empty() && records.front().observed.size() == nv;
  for (const auto& rec : records) {
    check_vector_size(rec.forecast, nv, "record forecast");
    check_vector_size(rec.error, nv, "record error");
    if ((rec.observed.size() == nv) != with_observed)
      throw InvariantError("write_history_csv: observed columns must be all-or-none");
  }

  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write wind history file '" + path + "'");
  out << "timestamp";
  for (const auto& v : system.vrg_units) out << ",forecast_" << v.id;
  for (const auto& v : system.vrg_units) out << ",error_" << v.id;
  if (with_observed)
    for (const auto& v : system.vrg_units) out << ",observed_" << v.id;
  out << "\n";
  for (const auto& rec : records) {
    out << rec.timestamp;
    for (double x : rec.forecast) out << "," << format_mw(x);
    for (double x : rec.error) out << "," << format_mw(x);
    if (with_observed)
      for (double x : rec.observed) out << "," << format_mw(x);
    out << "\n";
  }
}

}  // namespace dispatch
