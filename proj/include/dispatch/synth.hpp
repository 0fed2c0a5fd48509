#pragma once

#include <cstdint>
#include <vector>

#include "dispatch/model.hpp"
#include "dispatch/sampling.hpp"

namespace dispatch {

// Knobs for the synthetic wind generator. Forecasts follow a bounded
// autoregressive series per unit; errors are drawn with a spread that grows
// with the forecast level, so high-output hours are genuinely harder.
struct SynthConfig {
  std::uint64_t seed = 1;
  int history_rows = 1000;
  int validation_rows = 240;
  double ar_coef = 0.85;      // persistence of the forecast series
  double noise_scale = 0.08;  // forecast-step noise, fraction of capacity
  double error_base = 0.02;   // error spread at zero forecast, fraction of capacity
  double error_slope = 0.14;  // additional spread per unit of forecast level
};

struct SynthData {
  std::vector<HistoryRecord> history;     // forecast + error only
  std::vector<HistoryRecord> validation;  // carries observed output as well
};

// Deterministic: the same system and config reproduce every record bit for
// bit. Timestamps run continuously from the history into the validation rows.
SynthData generate_synthetic(const PowerSystem& system, const SynthConfig& config);

}  // namespace dispatch
