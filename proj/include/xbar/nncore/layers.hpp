#pragma once

#include <cstddef>
#include <vector>

#include "xbar/nncore/network.hpp"

namespace xbar::nn {

/// Unrolls a c x h x w input into a (h-k+1)(w-k+1) x (c*k*k) patch matrix.
/// Row p holds the receptive field of output position p, channel-major.
Tensor im2col(const Tensor& input, std::size_t k);

/// Scatter-adds a patch-matrix gradient back onto a c x h x w tensor.
Tensor col2im(const Tensor& cols, const Shape& input_shape, std::size_t k);

/// Convolution as one matrix product between the unrolled input and the
/// kernel matrix; output is c_out x (h-k+1) x (w-k+1).
Tensor conv2d_via_vmm(const Tensor& input, const LayerSpec& layer);

/// W x + b on the flattened input.
Tensor dense_forward(const Tensor& input, const LayerSpec& layer);

/// Max pooling; argmax receives the flat source index of every output.
Tensor maxpool_forward(const Tensor& input, std::size_t p, std::vector<std::size_t>* argmax = nullptr);

Tensor relu_forward(const Tensor& input);

/// Numerically stable softmax over all elements.
Tensor softmax_forward(const Tensor& logits);

/// Dispatches on layer.kind.
Tensor apply_layer(const LayerSpec& layer, const Tensor& input);

}  // namespace xbar::nn
