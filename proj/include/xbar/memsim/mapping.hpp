#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "xbar/memsim/crossbar.hpp"
#include "xbar/memsim/device.hpp"
#include "xbar/nncore/network.hpp"

namespace xbar::mem {

struct AffineFit {
  double a = 1.0;
  double b = 0.0;
  /// raw was constant; a = 0 and b = mean(ideal).
  bool degenerate = false;
};

/// Least-squares (a, b) minimizing sum (ideal - (a raw + b))^2.
AffineFit fit_affine_tuning(std::span<const double> ideal, std::span<const double> raw);

/// A dense or conv layer programmed onto positive and negative tile grids.
/// Tiles are stored row-block major: tile (rb, cb) is at rb * col_blocks + cb.
/// Rows are the fan-in (c_in k k for conv, one logical column per output
/// channel); conv spatial positions are streamed through the same tiles.
struct MappedLayer {
  nn::LayerKind kind = nn::LayerKind::dense;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::size_t c_in = 0;
  std::size_t kernel = 0;

  std::size_t row_blocks = 0;
  std::size_t col_blocks = 0;
  std::vector<CrossbarTile> pos_tiles;
  std::vector<CrossbarTile> neg_tiles;
  /// One converter configuration per row block; full scale tracks rows used.
  std::vector<AdcConfig> adc;

  Tensor bias;
  double w_max = 0.0;
  /// Weight units per siemens of differential conductance.
  double scale_k = 0.0;
  /// Activation magnitude mapped to v_read, from the calibration batch.
  double input_scale = 1.0;
  double tuning_a = 1.0;
  double tuning_b = 0.0;
  bool tuning_degenerate = false;
  std::size_t clipped_weights = 0;

  std::size_t tile_count() const { return pos_tiles.size() + neg_tiles.size(); }
};

using MappedStage = std::variant<MappedLayer, nn::LayerSpec>;
using MappedSeq = std::vector<MappedStage>;

/// Structural mirror of a NetworkSpec with weighted layers on crossbars.
struct MappedNetwork {
  std::vector<MappedSeq> branches;
  MappedSeq head;
  std::vector<Shape> input_shapes;
  double v_read = 0.3;
};

struct ConversionOptions {
  double v_read = 0.3;
  int adc_bits = 8;
  AdcMode adc_mode = AdcMode::per_pair_differential;
  bool adc_enabled = true;
};

struct LayerSummary {
  std::string name;
  std::size_t tiles = 0;
  std::size_t clipped = 0;
  double w_max = 0.0;
  double tuning_a = 1.0;
  double tuning_b = 0.0;
  bool degenerate = false;
};

struct ConversionSummary {
  std::vector<LayerSummary> layers;
  std::size_t tiles_total = 0;
  std::size_t clipped_total = 0;
};

/// Programs every weighted layer of `net` onto sampled devices and fits the
/// per-layer affine tuning against the float layer outputs on `calib`
/// (one input tensor per branch per sample). Throws InvalidInput on an empty
/// calibration batch.
MappedNetwork convert_network(const nn::NetworkSpec& net, const DeviceConfig& cfg,
                              std::span<const std::vector<Tensor>> calib, const ConversionOptions& opts = {},
                              ConversionSummary* summary = nullptr);

/// Analog inference: inputs become bipolar read voltages, tiles perform the
/// VMM, the ADC digitizes each column pair, partial sums from row blocks are
/// added digitally, then rescale, tuning, digital bias and activation.
Tensor mapped_forward(const MappedNetwork& mnet, std::span<const Tensor> inputs);

std::size_t mapped_predict(const MappedNetwork& mnet, std::span<const Tensor> inputs);

/// Raw crossbar output of one weighted layer for one input tensor, rescaled
/// to weight units, before tuning and bias. Conv output is c_out x positions.
std::vector<double> mapped_layer_raw(const MappedLayer& layer, const Tensor& input, double v_read);

}  // namespace xbar::mem
