#include "xbar/memsim/crossbar.hpp"

#include <algorithm>
#include <cmath>

#include "xbar/errors.hpp"

namespace xbar::mem {

CrossbarTile::CrossbarTile(Tensor conductance, Tensor g_on, Tensor g_off)
    : conductance_(std::move(conductance)), g_on_(std::move(g_on)), g_off_(std::move(g_off)) {
  if (conductance_.rank() != 2 || conductance_.dim(0) == 0 || conductance_.dim(1) == 0)
    throw InvalidInput("crossbar tile needs a non-empty rows x cols matrix");
  if (rows() > kTileRows || cols() > kTileCols)
    throw InvalidInput("crossbar tile " + shape_string(conductance_.shape()) + " exceeds 256x64");
  if (g_on_.shape() != conductance_.shape() || g_off_.shape() != conductance_.shape())
    throw InvalidInput("crossbar bound matrices do not match conductance shape");
  for (std::size_t i = 0; i < conductance_.size(); ++i) {
    if (!(g_off_[i] > 0.0) || !(g_on_[i] > g_off_[i]))
      throw InvalidInput("crossbar cell " + std::to_string(i) + " needs g_on > g_off > 0");
    if (conductance_[i] < g_off_[i] || conductance_[i] > g_on_[i])
      throw InvalidInput("crossbar cell " + std::to_string(i) + " conductance outside its device bounds");
  }
}

void crossbar_vmm_into(std::span<const double> volts, const CrossbarTile& tile, std::span<double> out) {
  if (volts.size() != tile.rows())
    throw InvalidInput("crossbar_vmm: " + std::to_string(volts.size()) + " voltages for " +
                       std::to_string(tile.rows()) + " rows");
  if (out.size() != tile.cols()) throw InvalidInput("crossbar_vmm: output size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t cols = tile.cols();
  const double* g = tile.conductance().storage().data();
  for (std::size_t i = 0; i < volts.size(); ++i) {
    const double v = volts[i];
    if (v == 0.0) continue;
    const double* row = g + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += v * row[j];
  }
}

std::vector<double> crossbar_vmm(std::span<const double> volts, const CrossbarTile& tile) {
  std::vector<double> out(tile.cols());
  crossbar_vmm_into(volts, tile, out);
  return out;
}

void AdcConfig::validate() const {
  if (bits < 1 || bits > 31) throw InvalidInput("ADC bits must lie in [1, 31]");
  if (!(i_fullscale > 0.0) || !std::isfinite(i_fullscale)) throw InvalidInput("ADC full scale must be > 0");
}

double AdcConfig::step() const { return i_fullscale / static_cast<double>((1LL << bits) - 1); }

double adc_read(double current, const AdcConfig& adc) {
  if (!adc.enabled) return current;
  const double lo = adc.mode == AdcMode::per_pair_differential ? -adc.i_fullscale : 0.0;
  const double x = std::clamp(current, lo, adc.i_fullscale);
  const double levels = static_cast<double>((1LL << adc.bits) - 1);
  const double q = x / adc.i_fullscale * levels;
  const double code = std::copysign(std::ceil(std::abs(q) - 0.5), q);
  return code * adc.i_fullscale / levels;
}

}  // namespace xbar::mem
