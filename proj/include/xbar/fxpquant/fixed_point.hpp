#pragma once

#include <span>
#include <vector>

#include "xbar/nncore/network.hpp"
#include "xbar/nncore/train.hpp"

namespace xbar::fxp {

/// Signed two's-complement fixed point with WL total and FL fraction bits.
struct FixedPointFormat {
  int word_length = 16;
  int fraction_length = 13;

  void validate() const;
  double resolution() const;
  double min_value() const;
  double max_value() const;
  friend bool operator==(const FixedPointFormat&, const FixedPointFormat&) = default;
};

/// round(w 2^FL) / 2^FL with ties to even, saturated to the format range.
double fx_quantize(double w, const FixedPointFormat& fmt);

/// Quantizes weights and biases of every weighted layer. `formats` holds one
/// entry per weighted layer in traversal order, or a single entry applied to
/// all of them.
nn::NetworkSpec quantize_network(const nn::NetworkSpec& net, std::span<const FixedPointFormat> formats);

/// Forward pass with activations quantized at every weighted layer output.
Tensor fixed_forward(const nn::NetworkSpec& qnet, std::span<const Tensor> inputs, const FixedPointFormat& act_fmt);

struct AccuracyDelta {
  double acc_float = 0.0;
  double acc_fixed = 0.0;
  double delta = 0.0;
};

/// Accuracy of `net` and of `qnet` on the same samples; delta = float - fixed.
/// With act_fmt set, qnet also quantizes activations at layer boundaries.
AccuracyDelta fx_accuracy_delta(const nn::NetworkSpec& net, const nn::NetworkSpec& qnet,
                                std::span<const nn::Example> data, const FixedPointFormat* act_fmt = nullptr);

}  // namespace xbar::fxp
