#include "xbar/fxpquant/fixed_point.hpp"

#include <algorithm>
#include <cmath>

#include "xbar/errors.hpp"
#include "xbar/nncore/layers.hpp"

namespace xbar::fxp {

void FixedPointFormat::validate() const {
  if (!(fraction_length >= 1 && fraction_length < word_length && word_length <= 32))
    throw InvalidInput("fixed-point format needs 1 <= FL < WL <= 32, got WL=" + std::to_string(word_length) +
                       " FL=" + std::to_string(fraction_length));
}

double FixedPointFormat::resolution() const { return std::ldexp(1.0, -fraction_length); }

double FixedPointFormat::min_value() const { return -std::ldexp(1.0, word_length - 1 - fraction_length); }

double FixedPointFormat::max_value() const {
  return std::ldexp(std::ldexp(1.0, word_length - 1) - 1.0, -fraction_length);
}

double fx_quantize(double w, const FixedPointFormat& fmt) {
  // nearbyint honours the default round-to-nearest-even mode
  const double code = std::nearbyint(std::ldexp(w, fmt.fraction_length));
  const double lo = -std::ldexp(1.0, fmt.word_length - 1), hi = std::ldexp(1.0, fmt.word_length - 1) - 1.0;
  return std::ldexp(std::clamp(code, lo, hi), -fmt.fraction_length);
}

nn::NetworkSpec quantize_network(const nn::NetworkSpec& net, std::span<const FixedPointFormat> formats) {
  if (formats.empty()) throw InvalidInput("quantize_network needs at least one format");
  for (const auto& f : formats) f.validate();
  std::size_t weighted = 0;
  nn::for_each_layer(net, [&](const nn::LayerSpec& l) { weighted += l.has_params() ? 1 : 0; });
  if (formats.size() != 1 && formats.size() != weighted)
    throw InvalidInput("quantize_network: " + std::to_string(formats.size()) + " formats for " +
                       std::to_string(weighted) + " weighted layers");

  nn::NetworkSpec q = net;
  std::size_t idx = 0;
  nn::for_each_layer(q, [&](nn::LayerSpec& l) {
    if (!l.has_params()) return;
    const FixedPointFormat& fmt = formats.size() == 1 ? formats[0] : formats[idx];
    for (double& w : l.weights.values()) w = fx_quantize(w, fmt);
    for (double& b : l.bias.values()) b = fx_quantize(b, fmt);
    ++idx;
  });
  return q;
}

namespace {

Tensor run_fixed(const nn::LayerSeq& seq, Tensor x, const FixedPointFormat& fmt) {
  for (const auto& layer : seq) {
    x = nn::apply_layer(layer, x);
    if (layer.has_params())
      for (double& v : x.values()) v = fx_quantize(v, fmt);
  }
  return x;
}

}  // namespace

Tensor fixed_forward(const nn::NetworkSpec& qnet, std::span<const Tensor> inputs, const FixedPointFormat& act_fmt) {
  act_fmt.validate();
  if (inputs.size() != qnet.branches.size()) throw InvalidInput("fixed_forward: wrong number of inputs");
  std::vector<Tensor> outs;
  for (std::size_t b = 0; b < qnet.branches.size(); ++b) {
    if (inputs[b].shape() != qnet.input_shapes[b]) throw InvalidInput("fixed_forward: input shape mismatch");
    Tensor x = inputs[b];
    for (double& v : x.values()) v = fx_quantize(v, act_fmt);
    outs.push_back(run_fixed(qnet.branches[b], std::move(x), act_fmt));
  }
  if (!qnet.fused()) return std::move(outs.front());
  return run_fixed(qnet.head, nn::concat_flat(outs), act_fmt);
}

AccuracyDelta fx_accuracy_delta(const nn::NetworkSpec& net, const nn::NetworkSpec& qnet,
                                std::span<const nn::Example> data, const FixedPointFormat* act_fmt) {
  if (net.branches.size() != qnet.branches.size() || net.input_shapes != qnet.input_shapes)
    throw InvalidInput("fx_accuracy_delta: networks differ in architecture");
  AccuracyDelta r;
  r.acc_float = nn::accuracy(net, data);
  if (act_fmt) {
    std::size_t correct = 0;
    for (const auto& ex : data)
      if (nn::argmax(fixed_forward(qnet, ex.inputs, *act_fmt).values()) == ex.label) ++correct;
    r.acc_fixed = data.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(data.size());
  } else {
    r.acc_fixed = nn::accuracy(qnet, data);
  }
  r.delta = r.acc_float - r.acc_fixed;
  return r;
}

}  // namespace xbar::fxp
