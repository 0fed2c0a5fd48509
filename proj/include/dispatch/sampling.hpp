#pragma once

#include <string>
#include <vector>

#include "dispatch/model.hpp"

namespace dispatch {

struct HistoryRecord {
  std::string timestamp;
  std::vector<double> forecast;  // per vrg, case order, MW
  std::vector<double> error;     // realized minus forecast, MW
  std::vector<double> observed;  // empty unless the series carries observations
};

// Rows drawn from a history by nearest-forecast selection. `errors` holds the
// selected error vectors in selection order; `indices` point back into the
// history they were drawn from.
struct SampleSet {
  std::vector<int> indices;
  std::vector<std::vector<double>> errors;
  std::vector<double> origin_forecast;

  int size() const { return static_cast<int>(indices.size()); }
};

struct SelectionConfig {
  int n_dne = 400;
  int n_obp = 20;
  bool clip_to_capacity = true;
};

// The min(n, |history|) records whose forecast vectors are closest (Euclidean)
// to the upcoming forecast. Distance ties break toward the earlier timestamp,
// then the lower history index.
SampleSet select_samples(const std::vector<HistoryRecord>& history,
                         const std::vector<double>& upcoming_forecast, int n);

// Error vector shifted so the implied realization forecast+e lands in
// [0, capacity] componentwise. Untouched when already inside.
std::vector<double> clip_sample(const std::vector<double>& error,
                                const std::vector<double>& upcoming_forecast,
                                const std::vector<double>& capacities);

SampleSet clip_sample_set(SampleSet samples, const std::vector<double>& capacities);

std::vector<double> vrg_capacities(const PowerSystem& system);

// CSV with header timestamp,forecast_<id>...,error_<id>... in case-file vrg
// order, optionally followed by observed_<id> columns (all or none).
std::vector<HistoryRecord> load_history_csv(const std::string& path, const PowerSystem& system);
void write_history_csv(const std::string& path, const std::vector<HistoryRecord>& records,
                       const PowerSystem& system);

}  // namespace dispatch
