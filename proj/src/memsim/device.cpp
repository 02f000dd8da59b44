#include "xbar/memsim/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "xbar/errors.hpp"
#include "xbar/rng.hpp"

namespace xbar::mem {

void DeviceConfig::validate() const {
  if (!(r_on_mean > 0.0) || !(r_on_mean < r_off_mean))
    throw InvalidInput("device config needs 0 < r_on_mean < r_off_mean");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("device sigma must be >= 0");
  if (!(positivity_floor > 0.0)) throw InvalidInput("positivity_floor must be > 0");
  if (n_states && *n_states < 2) throw InvalidInput("n_states must be >= 2");
}

DevicePair sample_unclamped(const DeviceConfig& cfg, std::uint64_t device_index) {
  if (cfg.sigma == 0.0) return {cfg.r_on_mean, cfg.r_off_mean};
  Rng rng(stream_key(cfg.seed, device_index));
  const double r_off = rng.normal(cfg.r_off_mean, 2.0 * cfg.sigma);
  const double r_on = rng.normal(cfg.r_on_mean, cfg.sigma);
  return {r_on, r_off};
}

DevicePair sample_device_pair(const DeviceConfig& cfg, std::uint64_t device_index) {
  DevicePair p = sample_unclamped(cfg, device_index);
  p.r_on = std::max(p.r_on, cfg.positivity_floor);
  p.r_off = std::max(p.r_off, cfg.positivity_floor);
  if (p.r_on > p.r_off) std::swap(p.r_on, p.r_off);
  if (p.r_on == p.r_off) p.r_off = std::nextafter(p.r_on, std::numeric_limits<double>::infinity());
  return p;
}

WeightMapping map_weight(double w, double w_max, double g_on, double g_off) {
  if (!(w_max > 0.0)) throw InvalidInput("map_weight: w_max must be > 0");
  const bool clipped = std::abs(w) > w_max;
  const double mag = std::min(std::abs(w), w_max) / w_max;
  const double g = g_off + mag * (g_on - g_off);
  if (w >= 0.0) return {g, g_off, clipped};
  return {g_off, g, clipped};
}

double quantize_state(double g, std::optional<std::size_t> n_states, double g_off, double g_on) {
  if (!n_states) return g;
  if (g <= g_off) return g_off;
  if (g >= g_on) return g_on;
  const double steps = static_cast<double>(*n_states - 1);
  const double pos = (g - g_off) / (g_on - g_off) * steps;
  // ties round toward g_off
  const double level = std::ceil(pos - 0.5);
  if (level >= steps) return g_on;
  return g_off + level * (g_on - g_off) / steps;
}

}  // namespace xbar::mem
