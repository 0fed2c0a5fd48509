#include "dispatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "dispatch/errors.hpp"

namespace dispatch {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Uniform and normal draws built directly on the engine's 64-bit output, so
// the stream is identical across standard libraries.
double uniform01(std::mt19937_64& gen) {
  return static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53;  // in (0, 1]
}

double normal(std::mt19937_64& gen) {
  double u1 = uniform01(gen);
  double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

void check_config(const SynthConfig& c) {
  if (c.history_rows < 1 || c.validation_rows < 1)
    throw InvariantError("synthetic row counts must be at least 1");
  if (!(c.ar_coef >= 0.0) || !(c.ar_coef < 1.0))
    throw InvariantError("autoregressive coefficient must lie in [0, 1)");
  if (!(c.noise_scale > 0.0)) throw InvariantError("noise scale must be positive");
  if (!(c.error_base >= 0.0) || !(c.error_slope >= 0.0))
    throw InvariantError("error spread parameters must be nonnegative");
  if (!(c.error_base + c.error_slope > 0.0))
    throw InvariantError("error spread must not vanish everywhere");
}

}  // namespace

SynthData generate_synthetic(const PowerSystem& system, const SynthConfig& config) {
  system.validate();
  check_config(config);
  if (system.vrg_units.empty()) throw InvariantError("system has no vrg units to synthesize");

  const std::vector<double> caps = vrg_capacities(system);
  const std::size_t nv = caps.size();
  std::mt19937_64 gen(config.seed);

  std::vector<double> level(nv);
  for (std::size_t j = 0; j < nv; ++j) level[j] = 0.5 * caps[j];

  SynthData out;
  const int total = config.history_rows + config.validation_rows;
  char ts[16];
  for (int t = 0; t < total; ++t) {
    HistoryRecord rec;
    std::snprintf(ts, sizeof(ts), "t%06d", t + 1);
    rec.timestamp = ts;
    rec.forecast.resize(nv);
    rec.error.resize(nv);
    for (std::size_t j = 0; j < nv; ++j) {
      const double w = caps[j];
      const double mid = 0.5 * w;
      double f = mid + config.ar_coef * (level[j] - mid) + config.noise_scale * w * normal(gen);
      f = std::clamp(f, 0.02 * w, 0.98 * w);
      level[j] = f;
      rec.forecast[j] = f;

      const double sigma = (config.error_base + config.error_slope * f / w) * w;
      double e = sigma * normal(gen);
      e = std::clamp(e, -f, w - f);  // observed output stays within [0, capacity]
      rec.error[j] = e;
    }
    if (t < config.history_rows) {
      out.history.push_back(std::move(rec));
    } else {
      rec.observed.resize(nv);
      for (std::size_t j = 0; j < nv; ++j) rec.observed[j] = rec.forecast[j] + rec.error[j];
      out.validation.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace dispatch
