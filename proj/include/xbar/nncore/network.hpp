#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xbar/tensor.hpp"

namespace xbar::nn {

enum class LayerKind { dense, conv2d, maxpool, relu, softmax };

std::string to_string(LayerKind kind);

/// One layer of a feed-forward sequence. Dense weights are out x in, conv
/// weights are c_out x c_in x k x k. Convolution is stride 1 without padding;
/// pooling is non-overlapping max with floor division of odd extents.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t kernel = 0;
  std::size_t pool = 0;
  Tensor weights;
  Tensor bias;

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec conv2d(std::size_t c_in, std::size_t c_out, std::size_t k);
  static LayerSpec maxpool(std::size_t p);
  static LayerSpec relu();
  static LayerSpec softmax();

  bool has_params() const { return kind == LayerKind::dense || kind == LayerKind::conv2d; }

  /// Shape produced for `input`; throws InvalidInput when incompatible.
  Shape output_shape(const Shape& input) const;

  /// Checks weight and bias shapes against the declared geometry.
  void validate() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

using LayerSeq = std::vector<LayerSpec>;

/// Declarative layer graph: one or two branches, and for two branches a
/// fusion head (dense + softmax) over the concatenated branch outputs.
struct NetworkSpec {
  std::vector<LayerSeq> branches;
  LayerSeq head;
  std::vector<Shape> input_shapes;
  /// Hardware instances per branch. Only the cost model reads this.
  std::vector<std::size_t> replicas;

  bool fused() const { return !head.empty(); }
  std::size_t class_count() const;
  /// Output shape of each branch, in branch order.
  std::vector<Shape> branch_output_shapes() const;
  void validate() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Calls fn(layer) on every layer in traversal order: branches, then head.
template <typename Net, typename Fn>
void for_each_layer(Net& net, Fn&& fn) {
  for (auto& branch : net.branches)
    for (auto& layer : branch) fn(layer);
  for (auto& layer : net.head) fn(layer);
}

/// Flattens and concatenates branch outputs for the fusion head.
Tensor concat_flat(std::span<const Tensor> parts);

/// Class probabilities for one sample; inputs holds one tensor per branch.
Tensor forward(const NetworkSpec& net, std::span<const Tensor> inputs);

/// Index of the largest probability.
std::size_t predict(const NetworkSpec& net, std::span<const Tensor> inputs);

std::size_t argmax(std::span<const double> values);

/// Multiply-accumulate count: dense in*out, conv c_in*k*k*c_out*positions.
std::uint64_t count_macs(const NetworkSpec& net);
std::uint64_t count_macs(const LayerSpec& layer, const Shape& input_shape);

}  // namespace xbar::nn
