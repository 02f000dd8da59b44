#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xbar/nncore/network.hpp"

namespace xbar::cost {

enum class AdcMode { per_pair_differential, per_column };

/// Physical constants of the tiled 1T1R crossbar accelerator (65 nm).
struct CostParams {
  double v_read = 0.3;             // V
  double i_cell_max = 3e-6;        // A, maximum read current per cell
  std::size_t tile_rows = 256;
  std::size_t tile_cols = 64;
  int cell_bits = 8;
  double resistance_ratio = 100.0;
  double p_adc = 2e-4;             // W per ADC
  double f_adc_nominal = 40e6;     // Hz
  double f_adc_bitserial = 5e6;    // Hz, one full conversion per cycle
  double a_adc = 3e-3;             // mm^2 per ADC
  double a_cell = 1.69e-7;         // mm^2 per cell
  AdcMode adc_mode = AdcMode::per_pair_differential;
  double array_utilization = 1.0;  // fraction of i_cell_max drawn on average

  void validate() const;
  /// Duration of one layer cycle: a single bit-serial ADC conversion.
  double cycle_time() const { return 1.0 / f_adc_bitserial; }
};

struct TileLayout {
  std::size_t rows = 0;            // fan-in
  std::size_t logical_cols = 0;    // outputs per duplicate
  std::size_t physical_cols = 0;   // 2 * logical_cols * dup
  std::size_t dup = 1;             // kernel copies (conv: one per output position)
  std::size_t row_blocks = 0;
  std::size_t tiles = 0;
  std::size_t adc_count = 0;
  std::uint64_t cells = 0;         // rows * physical_cols
};

/// Tile usage of one dense or conv layer fed `input_shape`. Throws
/// InvalidInput for parameter-free layers.
TileLayout tile_layout(const nn::LayerSpec& layer, const Shape& input_shape, const CostParams& params);

struct LayerCost {
  std::string name;
  TileLayout layout;
  std::size_t replicas = 1;
  double energy_adc_j = 0.0;
  double energy_cells_j = 0.0;
  double area_mm2 = 0.0;
  std::uint64_t macs = 0;
};

struct CostReport {
  double latency_s = 0.0;
  double energy_j = 0.0;
  double edp_js = 0.0;
  std::size_t tiles_total = 0;
  std::size_t adc_count = 0;
  double area_mm2 = 0.0;
  std::uint64_t macs = 0;
  std::vector<LayerCost> layers;
};

/// Weighted layers on the longest branch, plus one for a fusion head.
std::size_t layer_depth(const nn::NetworkSpec& net);

/// depth * cycle_time; independent of layer widths.
double latency(const nn::NetworkSpec& net, const CostParams& params);

/// Sum over layers of ADC energy plus cell read energy for one layer cycle.
double energy(const nn::NetworkSpec& net, const CostParams& params);

double edp(double energy_j, double latency_s);

/// Tile cell area plus ADC area.
double area(const nn::NetworkSpec& net, const CostParams& params);

/// Full report with per-layer breakdown; edp_js == energy_j * latency_s.
CostReport estimate(const nn::NetworkSpec& net, const CostParams& params);

}  // namespace xbar::cost
