#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xbar/tensor.hpp"

namespace xbar::mem {

inline constexpr std::size_t kTileRows = 256;
inline constexpr std::size_t kTileCols = 64;

/// A rows x cols block of programmed cells. Every cell carries its own
/// conductance bounds from its sampled R_ON / R_OFF.
class CrossbarTile {
 public:
  /// Throws InvalidInput if the geometry exceeds 256 x 64, the matrices
  /// disagree in shape, or any cell violates g_off <= g <= g_on, g_off > 0.
  CrossbarTile(Tensor conductance, Tensor g_on, Tensor g_off);

  std::size_t rows() const { return conductance_.dim(0); }
  std::size_t cols() const { return conductance_.dim(1); }
  const Tensor& conductance() const { return conductance_; }
  const Tensor& g_on() const { return g_on_; }
  const Tensor& g_off() const { return g_off_; }

 private:
  Tensor conductance_;
  Tensor g_on_;
  Tensor g_off_;
};

/// Column currents i_j = sum_i v_i G_ij under ideal wires (amperes).
std::vector<double> crossbar_vmm(std::span<const double> volts, const CrossbarTile& tile);

/// Same as crossbar_vmm, writing into `out` (size tile.cols()).
void crossbar_vmm_into(std::span<const double> volts, const CrossbarTile& tile, std::span<double> out);

enum class AdcMode { per_pair_differential, per_column };

/// Uniform current-mode ADC. With per_pair_differential one converter reads
/// the signed difference of a column pair over [-i_fullscale, i_fullscale];
/// with per_column each column is read unipolar over [0, i_fullscale].
/// Either way one polarity spans 2^bits - 1 steps.
struct AdcConfig {
  int bits = 8;
  double i_fullscale = 1.0;
  AdcMode mode = AdcMode::per_pair_differential;
  /// false passes currents through unquantized.
  bool enabled = true;

  void validate() const;
  double step() const;
};

/// Quantize one current reading; saturates at the range ends. Ties round
/// toward zero. Error is at most step()/2 <= i_fullscale / 2^bits in range.
double adc_read(double current, const AdcConfig& adc);

}  // namespace xbar::mem
