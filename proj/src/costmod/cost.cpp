#include "xbar/costmod/cost.hpp"

#include <algorithm>
#include <cmath>

#include "xbar/errors.hpp"

namespace xbar::cost {

void CostParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string("cost parameter ") + name + " must be > 0");
  };
  positive(v_read, "v_read");
  positive(i_cell_max, "i_cell_max");
  positive(resistance_ratio, "resistance_ratio");
  positive(p_adc, "p_adc");
  positive(f_adc_nominal, "f_adc_nominal");
  positive(f_adc_bitserial, "f_adc_bitserial");
  positive(a_adc, "a_adc");
  positive(a_cell, "a_cell");
  if (tile_rows == 0 || tile_cols == 0) throw InvalidInput("tile geometry must be nonzero");
  if (tile_cols % 2 != 0) throw InvalidInput("tile_cols must be even for paired columns");
  if (cell_bits < 1) throw InvalidInput("cell_bits must be >= 1");
  if (!(array_utilization > 0.0 && array_utilization <= 1.0))
    throw InvalidInput("array_utilization must lie in (0, 1]");
}

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

template <typename Fn>
void for_each_weighted(const nn::NetworkSpec& net, Fn&& fn) {
  std::vector<Shape> outs;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    Shape shape = net.input_shapes.at(b);
    const std::size_t reps = net.replicas.empty() ? 1 : net.replicas[b];
    std::size_t idx = 0;
    for (const auto& layer : net.branches[b]) {
      if (layer.has_params()) fn(layer, shape, reps, "b" + std::to_string(b) + ".l" + std::to_string(idx));
      shape = layer.output_shape(shape);
      ++idx;
    }
    outs.push_back(shape);
  }
  if (net.fused()) {
    std::size_t width = 0;
    for (const auto& s : outs) width += shape_size(s);
    Shape shape{width};
    std::size_t idx = 0;
    for (const auto& layer : net.head) {
      if (layer.has_params()) fn(layer, shape, std::size_t{1}, "head.l" + std::to_string(idx));
      shape = layer.output_shape(shape);
      ++idx;
    }
  }
}

}  // namespace

TileLayout tile_layout(const nn::LayerSpec& layer, const Shape& input_shape, const CostParams& params) {
  TileLayout t;
  if (layer.kind == nn::LayerKind::dense) {
    layer.output_shape(input_shape);
    t.rows = layer.in;
    t.logical_cols = layer.out;
    t.dup = 1;
  } else if (layer.kind == nn::LayerKind::conv2d) {
    const Shape out = layer.output_shape(input_shape);
    t.rows = layer.c_in * layer.kernel * layer.kernel;
    t.logical_cols = layer.c_out;
    t.dup = out[1] * out[2];
  } else {
    throw InvalidInput("tile_layout: " + nn::to_string(layer.kind) + " layer has no weights");
  }
  t.physical_cols = 2 * t.logical_cols * t.dup;
  t.row_blocks = ceil_div(t.rows, params.tile_rows);
  t.tiles = t.row_blocks * ceil_div(t.physical_cols, params.tile_cols);
  const std::size_t per_block = params.adc_mode == AdcMode::per_pair_differential ? t.physical_cols / 2 : t.physical_cols;
  t.adc_count = per_block * t.row_blocks;
  t.cells = static_cast<std::uint64_t>(t.rows) * t.physical_cols;
  return t;
}

std::size_t layer_depth(const nn::NetworkSpec& net) {
  std::size_t depth = 0;
  for (const auto& branch : net.branches)
    depth = std::max(depth, static_cast<std::size_t>(std::count_if(
                                branch.begin(), branch.end(), [](const nn::LayerSpec& l) { return l.has_params(); })));
  if (net.fused()) depth += 1;
  return depth;
}

double latency(const nn::NetworkSpec& net, const CostParams& params) {
  return static_cast<double>(layer_depth(net)) * params.cycle_time();
}

CostReport estimate(const nn::NetworkSpec& net, const CostParams& params) {
  params.validate();
  CostReport r;
  const double t = params.cycle_time();
  const double tile_area = static_cast<double>(params.tile_rows * params.tile_cols) * params.a_cell;
  for_each_weighted(net, [&](const nn::LayerSpec& layer, const Shape& shape, std::size_t reps, std::string name) {
    LayerCost lc;
    lc.name = std::move(name);
    lc.layout = tile_layout(layer, shape, params);
    lc.replicas = reps;
    const double n = static_cast<double>(reps);
    lc.energy_adc_j = n * static_cast<double>(lc.layout.adc_count) * params.p_adc * t;
    lc.energy_cells_j =
        n * static_cast<double>(lc.layout.cells) * params.i_cell_max * params.v_read * t * params.array_utilization;
    lc.area_mm2 = n * (static_cast<double>(lc.layout.tiles) * tile_area +
                       static_cast<double>(lc.layout.adc_count) * params.a_adc);
    lc.macs = reps * nn::count_macs(layer, shape);
    r.energy_j += lc.energy_adc_j + lc.energy_cells_j;
    r.area_mm2 += lc.area_mm2;
    r.tiles_total += reps * lc.layout.tiles;
    r.adc_count += reps * lc.layout.adc_count;
    r.macs += lc.macs;
    r.layers.push_back(std::move(lc));
  });
  r.latency_s = latency(net, params);
  r.edp_js = edp(r.energy_j, r.latency_s);
  return r;
}

double energy(const nn::NetworkSpec& net, const CostParams& params) { return estimate(net, params).energy_j; }

double edp(double energy_j, double latency_s) {
  if (energy_j < 0.0 || latency_s < 0.0) throw InvalidInput("edp: energy and latency must be nonnegative");
  return energy_j * latency_s;
}

double area(const nn::NetworkSpec& net, const CostParams& params) { return estimate(net, params).area_mm2; }

}  // namespace xbar::cost
