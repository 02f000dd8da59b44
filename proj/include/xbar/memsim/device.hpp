#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

namespace xbar::mem {

/// Device-to-device variability of a 1T1R cell. R_OFF ~ N(r_off_mean, 2 sigma),
/// R_ON ~ N(r_on_mean, sigma), both clamped to positivity_floor.
struct DeviceConfig {
  double r_on_mean = 100.0;
  double r_off_mean = 2500.0;
  double sigma = 0.0;
  /// Programmable conductance levels; nullopt means a continuous range.
  std::optional<std::size_t> n_states = 256;
  std::uint64_t seed = 0;
  double positivity_floor = 1.0;

  void validate() const;
  double g_on_nominal() const { return 1.0 / r_on_mean; }
  double g_off_nominal() const { return 1.0 / r_off_mean; }
};

struct DevicePair {
  double r_on;
  double r_off;
};

/// Raw normal draws for device `device_index`, before positivity handling.
DevicePair sample_unclamped(const DeviceConfig& cfg, std::uint64_t device_index);

/// Sampled resistances for device `device_index`. The stream is keyed on
/// (cfg.seed, device_index), so a device's draw never depends on the order in
/// which devices are visited. Both values are clamped to the positivity
/// floor; if r_on >= r_off afterwards they are swapped, and an exact tie is
/// broken by moving r_off one ulp up.
DevicePair sample_device_pair(const DeviceConfig& cfg, std::uint64_t device_index);

struct WeightMapping {
  double g_pos;
  double g_neg;
  bool clipped;
};

/// Double-column mapping of a signed weight. The column matching the sign of
/// w gets g_off + |w|/w_max (g_on - g_off); the other column stays at g_off.
/// |w| > w_max is clipped and reported.
WeightMapping map_weight(double w, double w_max, double g_on, double g_off);

/// Nearest of n_states evenly spaced levels in [g_off, g_on], ties toward
/// g_off. Input outside the range is clamped first. nullopt is the identity.
double quantize_state(double g, std::optional<std::size_t> n_states, double g_off, double g_on);

}  // namespace xbar::mem
