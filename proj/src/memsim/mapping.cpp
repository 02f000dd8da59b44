#include "xbar/memsim/mapping.hpp"

#include <algorithm>
#include <cmath>

#include "xbar/errors.hpp"
#include "xbar/nncore/layers.hpp"

namespace xbar::mem {

AffineFit fit_affine_tuning(std::span<const double> ideal, std::span<const double> raw) {
  if (ideal.size() != raw.size()) throw InvalidInput("fit_affine_tuning: ideal and raw differ in length");
  if (raw.size() < 2) throw InvalidInput("fit_affine_tuning needs at least two points");
  const double n = static_cast<double>(raw.size());
  double mean_r = 0.0, mean_i = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    mean_r += raw[k];
    mean_i += ideal[k];
  }
  mean_r /= n;
  mean_i /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const double dr = raw[k] - mean_r;
    sxx += dr * dr;
    sxy += dr * (ideal[k] - mean_i);
  }
  if (sxx == 0.0) return {0.0, mean_i, true};
  const double a = sxy / sxx;
  return {a, mean_i - a * mean_r, false};
}

namespace {

std::uint64_t device_index(std::size_t ordinal, int polarity, std::size_t row, std::size_t col) {
  return (static_cast<std::uint64_t>(ordinal * 2 + static_cast<std::size_t>(polarity)) << 40) |
         (static_cast<std::uint64_t>(row) << 20) | static_cast<std::uint64_t>(col);
}

MappedLayer program_layer(const nn::LayerSpec& layer, std::size_t ordinal, const DeviceConfig& cfg,
                          const ConversionOptions& opts) {
  MappedLayer m;
  m.kind = layer.kind;
  if (layer.kind == nn::LayerKind::dense) {
    m.fan_in = layer.in;
    m.fan_out = layer.out;
  } else {
    m.c_in = layer.c_in;
    m.kernel = layer.kernel;
    m.fan_in = layer.c_in * layer.kernel * layer.kernel;
    m.fan_out = layer.c_out;
  }
  m.bias = layer.bias;
  const auto w = layer.weights.values();
  double w_max = 0.0;
  for (double x : w) w_max = std::max(w_max, std::abs(x));
  m.w_max = w_max > 0.0 ? w_max : 1.0;

  const double g_on = cfg.g_on_nominal(), g_off = cfg.g_off_nominal();
  m.scale_k = m.w_max / (g_on - g_off);
  m.row_blocks = (m.fan_in + kTileRows - 1) / kTileRows;
  m.col_blocks = (m.fan_out + kTileCols - 1) / kTileCols;

  for (std::size_t rb = 0; rb < m.row_blocks; ++rb) {
    const std::size_t r0 = rb * kTileRows, rows = std::min(kTileRows, m.fan_in - r0);
    AdcConfig adc;
    adc.bits = opts.adc_bits;
    adc.mode = opts.adc_mode;
    adc.enabled = opts.adc_enabled;
    adc.i_fullscale = static_cast<double>(rows) * opts.v_read * g_on;
    adc.validate();
    m.adc.push_back(adc);
    for (std::size_t cb = 0; cb < m.col_blocks; ++cb) {
      const std::size_t c0 = cb * kTileCols, cols = std::min(kTileCols, m.fan_out - c0);
      Tensor g[2] = {Tensor({rows, cols}), Tensor({rows, cols})};
      Tensor hi[2] = {Tensor({rows, cols}), Tensor({rows, cols})};
      Tensor lo[2] = {Tensor({rows, cols}), Tensor({rows, cols})};
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const double weight = w[(c0 + c) * m.fan_in + r0 + r];
          const WeightMapping target = map_weight(weight, m.w_max, g_on, g_off);
          if (target.clipped) ++m.clipped_weights;
          const double nominal[2] = {quantize_state(target.g_pos, cfg.n_states, g_off, g_on),
                                     quantize_state(target.g_neg, cfg.n_states, g_off, g_on)};
          for (int p = 0; p < 2; ++p) {
            const DevicePair dev = sample_device_pair(cfg, device_index(ordinal, p, r0 + r, c0 + c));
            const double dev_on = 1.0 / dev.r_on, dev_off = 1.0 / dev.r_off;
            double v = quantize_state(nominal[p], cfg.n_states, dev_off, dev_on);
            if (!cfg.n_states) v = std::clamp(v, dev_off, dev_on);
            g[p].at(r, c) = v;
            hi[p].at(r, c) = dev_on;
            lo[p].at(r, c) = dev_off;
          }
        }
      }
      m.pos_tiles.emplace_back(std::move(g[0]), std::move(hi[0]), std::move(lo[0]));
      m.neg_tiles.emplace_back(std::move(g[1]), std::move(hi[1]), std::move(lo[1]));
    }
  }
  return m;
}

// Digitized differential column sums of one input vector, in siemens*volts.
void layer_vmm(const MappedLayer& m, const double* volts, double* sums, std::vector<double>& ipos,
               std::vector<double>& ineg) {
  std::fill(sums, sums + m.fan_out, 0.0);
  for (std::size_t rb = 0; rb < m.row_blocks; ++rb) {
    const AdcConfig& adc = m.adc[rb];
    for (std::size_t cb = 0; cb < m.col_blocks; ++cb) {
      const CrossbarTile& pos = m.pos_tiles[rb * m.col_blocks + cb];
      const CrossbarTile& neg = m.neg_tiles[rb * m.col_blocks + cb];
      const std::span<const double> v(volts + rb * kTileRows, pos.rows());
      ipos.resize(pos.cols());
      ineg.resize(neg.cols());
      crossbar_vmm_into(v, pos, ipos);
      crossbar_vmm_into(v, neg, ineg);
      double* out = sums + cb * kTileCols;
      for (std::size_t j = 0; j < pos.cols(); ++j) {
        if (adc.mode == AdcMode::per_pair_differential)
          out[j] += adc_read(ipos[j] - ineg[j], adc);
        else
          out[j] += adc_read(ipos[j], adc) - adc_read(ineg[j], adc);
      }
    }
  }
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

std::string layer_name(std::size_t branch, std::size_t index, const nn::LayerSpec& l) {
  const std::string where = branch == static_cast<std::size_t>(-1) ? "head" : "b" + std::to_string(branch);
  if (l.kind == nn::LayerKind::dense)
    return where + ".l" + std::to_string(index) + ":dense" + std::to_string(l.in) + "x" + std::to_string(l.out);
  return where + ".l" + std::to_string(index) + ":conv" + std::to_string(l.c_out) + "c" + std::to_string(l.kernel);
}

// Maps one sequence; `acts` holds the float activations of every calibration
// sample at the sequence input and is advanced through the float layers.
MappedSeq convert_seq(const nn::LayerSeq& seq, std::size_t branch, std::vector<Tensor>& acts,
                      std::size_t& ordinal, const DeviceConfig& cfg, const ConversionOptions& opts,
                      ConversionSummary* summary) {
  MappedSeq out;
  for (std::size_t li = 0; li < seq.size(); ++li) {
    const nn::LayerSpec& layer = seq[li];
    if (!layer.has_params()) {
      for (auto& a : acts) a = nn::apply_layer(layer, a);
      out.emplace_back(layer);
      continue;
    }
    MappedLayer m = program_layer(layer, ordinal++, cfg, opts);
    double scale = 0.0;
    for (const auto& a : acts) scale = std::max(scale, max_abs(a));
    m.input_scale = scale > 0.0 ? scale : 1.0;

    std::vector<double> ideal, raw;
    for (auto& a : acts) {
      const std::vector<double> r = mapped_layer_raw(m, a, opts.v_read);
      Tensor y = nn::apply_layer(layer, a);
      const std::size_t per_channel = y.size() / m.fan_out;
      for (std::size_t k = 0; k < y.size(); ++k) ideal.push_back(y[k] - layer.bias[k / per_channel]);
      raw.insert(raw.end(), r.begin(), r.end());
      a = std::move(y);
    }
    const AffineFit fit = fit_affine_tuning(ideal, raw);
    m.tuning_a = fit.a;
    m.tuning_b = fit.b;
    m.tuning_degenerate = fit.degenerate;
    if (summary) {
      summary->layers.push_back(
          {layer_name(branch, li, layer), m.tile_count(), m.clipped_weights, m.w_max, fit.a, fit.b, fit.degenerate});
      summary->tiles_total += m.tile_count();
      summary->clipped_total += m.clipped_weights;
    }
    out.emplace_back(std::move(m));
  }
  return out;
}

Tensor run_mapped_seq(const MappedSeq& seq, Tensor x, double v_read) {
  for (const auto& stage : seq) {
    if (const auto* layer = std::get_if<nn::LayerSpec>(&stage)) {
      x = nn::apply_layer(*layer, x);
    } else {
      const auto& m = std::get<MappedLayer>(stage);
      Shape out_shape = m.kind == nn::LayerKind::dense
                            ? Shape{m.fan_out}
                            : Shape{m.fan_out, x.dim(1) - m.kernel + 1, x.dim(2) - m.kernel + 1};
      std::vector<double> raw = mapped_layer_raw(m, x, v_read);
      const std::size_t per_channel = raw.size() / m.fan_out;
      for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = m.tuning_a * raw[k] + m.tuning_b + m.bias[k / per_channel];
      x = Tensor(std::move(out_shape), std::move(raw));
    }
    if (!x.all_finite()) throw NumericFault("non-finite activation in mapped network");
  }
  return x;
}

}  // namespace

std::vector<double> mapped_layer_raw(const MappedLayer& m, const Tensor& input, double v_read) {
  const double to_volts = v_read / m.input_scale;
  const double to_weight = m.input_scale * m.scale_k / v_read;
  std::vector<double> volts(m.fan_in), sums(m.fan_out), ipos, ineg;
  auto encode = [&](const double* x) {
    for (std::size_t i = 0; i < m.fan_in; ++i) volts[i] = std::clamp(x[i] * to_volts, -v_read, v_read);
  };

  if (m.kind == nn::LayerKind::dense) {
    if (input.size() != m.fan_in)
      throw InvalidInput("mapped dense layer expects " + std::to_string(m.fan_in) + " inputs, got " +
                         shape_string(input.shape()));
    encode(input.storage().data());
    layer_vmm(m, volts.data(), sums.data(), ipos, ineg);
    for (double& s : sums) s *= to_weight;
    return sums;
  }

  if (input.rank() != 3 || input.dim(0) != m.c_in)
    throw InvalidInput("mapped conv layer expects " + std::to_string(m.c_in) + " channels, got " +
                       shape_string(input.shape()));
  const Tensor cols = nn::im2col(input, m.kernel);
  const std::size_t positions = cols.dim(0);
  std::vector<double> out(m.fan_out * positions);
  for (std::size_t p = 0; p < positions; ++p) {
    encode(cols.storage().data() + p * m.fan_in);
    layer_vmm(m, volts.data(), sums.data(), ipos, ineg);
    for (std::size_t c = 0; c < m.fan_out; ++c) out[c * positions + p] = sums[c] * to_weight;
  }
  return out;
}

MappedNetwork convert_network(const nn::NetworkSpec& net, const DeviceConfig& cfg,
                              std::span<const std::vector<Tensor>> calib, const ConversionOptions& opts,
                              ConversionSummary* summary) {
  net.validate();
  cfg.validate();
  if (calib.empty()) throw InvalidInput("convert_network: calibration batch is empty");
  if (!(opts.v_read > 0.0)) throw InvalidInput("v_read must be > 0");
  for (const auto& sample : calib) {
    if (sample.size() != net.branches.size())
      throw InvalidInput("calibration sample has " + std::to_string(sample.size()) + " inputs, network has " +
                         std::to_string(net.branches.size()) + " branches");
    for (std::size_t b = 0; b < sample.size(); ++b)
      if (sample[b].shape() != net.input_shapes[b])
        throw InvalidInput("calibration input for branch " + std::to_string(b) + " has shape " +
                           shape_string(sample[b].shape()) + ", expected " + shape_string(net.input_shapes[b]));
  }
  if (summary) *summary = {};

  MappedNetwork mnet;
  mnet.input_shapes = net.input_shapes;
  mnet.v_read = opts.v_read;
  std::size_t ordinal = 0;
  std::vector<std::vector<Tensor>> branch_out(net.branches.size());
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    std::vector<Tensor> acts;
    for (const auto& sample : calib) acts.push_back(sample[b]);
    mnet.branches.push_back(convert_seq(net.branches[b], b, acts, ordinal, cfg, opts, summary));
    branch_out[b] = std::move(acts);
  }
  if (net.fused()) {
    std::vector<Tensor> acts;
    for (std::size_t s = 0; s < calib.size(); ++s) {
      std::vector<Tensor> parts;
      for (auto& bo : branch_out) parts.push_back(bo[s]);
      acts.push_back(nn::concat_flat(parts));
    }
    mnet.head = convert_seq(net.head, static_cast<std::size_t>(-1), acts, ordinal, cfg, opts, summary);
  }
  return mnet;
}

Tensor mapped_forward(const MappedNetwork& mnet, std::span<const Tensor> inputs) {
  if (inputs.size() != mnet.branches.size())
    throw InvalidInput("expected " + std::to_string(mnet.branches.size()) + " inputs, got " +
                       std::to_string(inputs.size()));
  std::vector<Tensor> outs;
  for (std::size_t b = 0; b < mnet.branches.size(); ++b) {
    if (inputs[b].shape() != mnet.input_shapes[b])
      throw InvalidInput("branch " + std::to_string(b) + " expects input " + shape_string(mnet.input_shapes[b]) +
                         ", got " + shape_string(inputs[b].shape()));
    outs.push_back(run_mapped_seq(mnet.branches[b], inputs[b], mnet.v_read));
  }
  if (mnet.head.empty()) return std::move(outs.front());
  return run_mapped_seq(mnet.head, nn::concat_flat(outs), mnet.v_read);
}

std::size_t mapped_predict(const MappedNetwork& mnet, std::span<const Tensor> inputs) {
  return nn::argmax(mapped_forward(mnet, inputs).values());
}

}  // namespace xbar::mem
