#include "xbar/nncore/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xbar/errors.hpp"

namespace xbar::nn {

namespace {

void require_chw(const Tensor& input, const char* what) {
  if (input.rank() != 3)
    throw InvalidInput(std::string(what) + " expects a c x h x w tensor, got " + shape_string(input.shape()));
}

}  // namespace

Tensor im2col(const Tensor& input, std::size_t k) {
  require_chw(input, "im2col");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (k == 0 || k > h || k > w)
    throw InvalidInput("kernel " + std::to_string(k) + " does not fit input " + shape_string(input.shape()));
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  const std::size_t patch = c * k * k;
  Tensor cols({oh * ow, patch});
  double* dst = cols.storage().data();
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx) *dst++ = input.at(ch, y + ky, x + kx);
    }
  }
  return cols;
}

Tensor col2im(const Tensor& cols, const Shape& input_shape, std::size_t k) {
  const std::size_t c = input_shape.at(0), h = input_shape.at(1), w = input_shape.at(2);
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  if (cols.rank() != 2 || cols.dim(0) != oh * ow || cols.dim(1) != c * k * k)
    throw InvalidInput("col2im: patch matrix " + shape_string(cols.shape()) + " does not match input " +
                       shape_string(input_shape));
  Tensor out(input_shape);
  const double* src = cols.storage().data();
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx) out.at(ch, y + ky, x + kx) += *src++;
  return out;
}

Tensor conv2d_via_vmm(const Tensor& input, const LayerSpec& layer) {
  if (layer.kind != LayerKind::conv2d) throw InvalidInput("conv2d_via_vmm: layer is " + to_string(layer.kind));
  require_chw(input, "conv2d");
  if (input.dim(0) != layer.c_in)
    throw InvalidInput("conv2d: expected " + std::to_string(layer.c_in) + " input channels, got " +
                       shape_string(input.shape()));
  const Tensor cols = im2col(input, layer.kernel);
  const std::size_t positions = cols.dim(0), patch = cols.dim(1);
  const std::size_t oh = input.dim(1) - layer.kernel + 1, ow = input.dim(2) - layer.kernel + 1;
  Tensor out({layer.c_out, oh, ow});
  const double* w = layer.weights.storage().data();
  for (std::size_t co = 0; co < layer.c_out; ++co) {
    const double* wrow = w + co * patch;
    for (std::size_t p = 0; p < positions; ++p) {
      const double* prow = cols.storage().data() + p * patch;
      double acc = 0.0;
      for (std::size_t j = 0; j < patch; ++j) acc += wrow[j] * prow[j];
      out[co * positions + p] = acc + layer.bias[co];
    }
  }
  return out;
}

Tensor dense_forward(const Tensor& input, const LayerSpec& layer) {
  if (input.size() != layer.in)
    throw InvalidInput("dense: expected " + std::to_string(layer.in) + " inputs, got " +
                       shape_string(input.shape()));
  Tensor out({layer.out});
  const double* x = input.storage().data();
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double* wrow = layer.weights.storage().data() + o * layer.in;
    double acc = 0.0;
    for (std::size_t i = 0; i < layer.in; ++i) acc += wrow[i] * x[i];
    out[o] = acc + layer.bias[o];
  }
  return out;
}

Tensor maxpool_forward(const Tensor& input, std::size_t p, std::vector<std::size_t>* argmax) {
  require_chw(input, "maxpool");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (p == 0 || p > h || p > w)
    throw InvalidInput("pool " + std::to_string(p) + " does not fit input " + shape_string(input.shape()));
  const std::size_t oh = h / p, ow = w / p;
  Tensor out({c, oh, ow});
  if (argmax) argmax->assign(out.size(), 0);
  std::size_t o = 0;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x, ++o) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t dy = 0; dy < p; ++dy)
          for (std::size_t dx = 0; dx < p; ++dx) {
            const std::size_t idx = (ch * h + y * p + dy) * w + x * p + dx;
            if (input[idx] > best) {
              best = input[idx];
              best_idx = idx;
            }
          }
        out[o] = best;
        if (argmax) (*argmax)[o] = best_idx;
      }
  return out;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = std::max(v, 0.0);
  return out;
}

Tensor softmax_forward(const Tensor& logits) {
  Tensor out = logits;
  auto v = out.values();
  if (v.empty()) return out;
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
  return out;
}

Tensor apply_layer(const LayerSpec& layer, const Tensor& input) {
  switch (layer.kind) {
    case LayerKind::dense:
      return dense_forward(input, layer);
    case LayerKind::conv2d:
      return conv2d_via_vmm(input, layer);
    case LayerKind::maxpool:
      return maxpool_forward(input, layer.pool);
    case LayerKind::relu:
      return relu_forward(input);
    case LayerKind::softmax:
      return softmax_forward(input);
  }
  throw InvalidInput("unknown layer kind");
}

}  // namespace xbar::nn
