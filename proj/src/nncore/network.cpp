#include "xbar/nncore/network.hpp"

#include <algorithm>

#include "xbar/errors.hpp"
#include "xbar/nncore/layers.hpp"

namespace xbar::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense:
      return "dense";
    case LayerKind::conv2d:
      return "conv2d";
    case LayerKind::maxpool:
      return "maxpool";
    case LayerKind::relu:
      return "relu";
    case LayerKind::softmax:
      return "softmax";
  }
  return "?";
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  if (in == 0 || out == 0) throw InvalidInput("dense layer needs nonzero widths");
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.in = in;
  l.out = out;
  l.weights = Tensor({out, in});
  l.bias = Tensor({out});
  return l;
}

LayerSpec LayerSpec::conv2d(std::size_t c_in, std::size_t c_out, std::size_t k) {
  if (c_in == 0 || c_out == 0 || k == 0) throw InvalidInput("conv2d layer needs nonzero channels and k >= 1");
  LayerSpec l;
  l.kind = LayerKind::conv2d;
  l.c_in = c_in;
  l.c_out = c_out;
  l.kernel = k;
  l.weights = Tensor({c_out, c_in, k, k});
  l.bias = Tensor({c_out});
  return l;
}

LayerSpec LayerSpec::maxpool(std::size_t p) {
  if (p == 0) throw InvalidInput("pool size must be >= 1");
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.pool = p;
  return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::softmax() {
  LayerSpec l;
  l.kind = LayerKind::softmax;
  return l;
}

Shape LayerSpec::output_shape(const Shape& input) const {
  switch (kind) {
    case LayerKind::dense:
      if (shape_size(input) != in)
        throw InvalidInput("dense " + std::to_string(in) + "->" + std::to_string(out) + " cannot take input " +
                           shape_string(input));
      return {out};
    case LayerKind::conv2d:
      if (input.size() != 3 || input[0] != c_in || input[1] < kernel || input[2] < kernel)
        throw InvalidInput("conv2d " + std::to_string(c_out) + "c" + std::to_string(kernel) +
                           " cannot take input " + shape_string(input));
      return {c_out, input[1] - kernel + 1, input[2] - kernel + 1};
    case LayerKind::maxpool:
      if (input.size() != 3 || input[1] < pool || input[2] < pool)
        throw InvalidInput("maxpool " + std::to_string(pool) + " cannot take input " + shape_string(input));
      return {input[0], input[1] / pool, input[2] / pool};
    case LayerKind::relu:
    case LayerKind::softmax:
      return input;
  }
  throw InvalidInput("unknown layer kind");
}

void LayerSpec::validate() const {
  switch (kind) {
    case LayerKind::dense:
      if (in == 0 || out == 0) throw InvalidInput("dense layer needs nonzero widths");
      if (weights.shape() != Shape{out, in} || bias.shape() != Shape{out})
        throw InvalidInput("dense " + std::to_string(in) + "->" + std::to_string(out) + " has weights " +
                           shape_string(weights.shape()) + " and bias " + shape_string(bias.shape()));
      break;
    case LayerKind::conv2d:
      if (kernel == 0 || c_in == 0 || c_out == 0) throw InvalidInput("conv2d needs k >= 1 and nonzero channels");
      if (weights.shape() != Shape{c_out, c_in, kernel, kernel} || bias.shape() != Shape{c_out})
        throw InvalidInput("conv2d has weights " + shape_string(weights.shape()) + " and bias " +
                           shape_string(bias.shape()));
      break;
    case LayerKind::maxpool:
      if (pool == 0) throw InvalidInput("pool size must be >= 1");
      break;
    case LayerKind::relu:
    case LayerKind::softmax:
      break;
  }
}

namespace {

Shape seq_output_shape(const LayerSeq& seq, Shape shape) {
  for (const auto& layer : seq) shape = layer.output_shape(shape);
  return shape;
}

std::size_t count_softmax(const LayerSeq& seq) {
  return static_cast<std::size_t>(
      std::count_if(seq.begin(), seq.end(), [](const LayerSpec& l) { return l.kind == LayerKind::softmax; }));
}

}  // namespace

std::vector<Shape> NetworkSpec::branch_output_shapes() const {
  std::vector<Shape> shapes;
  for (std::size_t b = 0; b < branches.size(); ++b) shapes.push_back(seq_output_shape(branches[b], input_shapes.at(b)));
  return shapes;
}

std::size_t NetworkSpec::class_count() const {
  const auto shapes = branch_output_shapes();
  if (!fused()) return shape_size(shapes.front());
  std::size_t width = 0;
  for (const auto& s : shapes) width += shape_size(s);
  return shape_size(seq_output_shape(head, {width}));
}

void NetworkSpec::validate() const {
  if (branches.empty() || branches.size() > 2) throw InvalidInput("network needs one or two branches");
  if (input_shapes.size() != branches.size()) throw InvalidInput("one input shape per branch required");
  if (!replicas.empty() && replicas.size() != branches.size())
    throw InvalidInput("replicas must list one count per branch");
  for (auto r : replicas)
    if (r == 0) throw InvalidInput("replica count must be >= 1");
  for_each_layer(*this, [](const LayerSpec& l) { l.validate(); });

  const auto shapes = branch_output_shapes();
  std::size_t softmaxes = 0;
  for (const auto& b : branches) softmaxes += count_softmax(b);
  softmaxes += count_softmax(head);
  if (softmaxes != 1) throw InvalidInput("network must contain exactly one softmax, found " + std::to_string(softmaxes));

  const LayerSeq& last = fused() ? head : branches.front();
  if (last.empty() || last.back().kind != LayerKind::softmax) throw InvalidInput("softmax must be the output layer");

  if (branches.size() == 2) {
    if (!fused()) throw InvalidInput("two-branch network requires a fusion head");
    if (head.size() != 2 || head.front().kind != LayerKind::dense)
      throw InvalidInput("fusion head must be one dense layer followed by softmax");
    std::size_t width = 0;
    for (const auto& s : shapes) width += shape_size(s);
    if (head.front().in != width)
      throw InvalidInput("fusion head takes " + std::to_string(head.front().in) +
                         " inputs but branches produce " + std::to_string(width));
  } else if (fused()) {
    throw InvalidInput("fusion head requires two branches");
  }
}

Tensor concat_flat(std::span<const Tensor> parts) {
  std::vector<double> data;
  for (const auto& t : parts) data.insert(data.end(), t.storage().begin(), t.storage().end());
  const std::size_t n = data.size();
  return Tensor({n}, std::move(data));
}

namespace {

Tensor run_seq(const LayerSeq& seq, Tensor x) {
  for (const auto& layer : seq) {
    x = apply_layer(layer, x);
    if (!x.all_finite()) throw NumericFault("non-finite activation after " + to_string(layer.kind) + " layer");
  }
  return x;
}

}  // namespace

Tensor forward(const NetworkSpec& net, std::span<const Tensor> inputs) {
  if (inputs.size() != net.branches.size())
    throw InvalidInput("expected " + std::to_string(net.branches.size()) + " inputs, got " +
                       std::to_string(inputs.size()));
  std::vector<Tensor> outs;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    if (inputs[b].shape() != net.input_shapes.at(b))
      throw InvalidInput("branch " + std::to_string(b) + " expects input " + shape_string(net.input_shapes[b]) +
                         ", got " + shape_string(inputs[b].shape()));
    if (!inputs[b].all_finite()) throw NumericFault("non-finite input to branch " + std::to_string(b));
    outs.push_back(run_seq(net.branches[b], inputs[b]));
  }
  if (!net.fused()) return std::move(outs.front());
  return run_seq(net.head, concat_flat(outs));
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::size_t predict(const NetworkSpec& net, std::span<const Tensor> inputs) {
  return argmax(forward(net, inputs).values());
}

std::uint64_t count_macs(const LayerSpec& layer, const Shape& input_shape) {
  switch (layer.kind) {
    case LayerKind::dense:
      return static_cast<std::uint64_t>(layer.in) * layer.out;
    case LayerKind::conv2d: {
      const Shape out = layer.output_shape(input_shape);
      return static_cast<std::uint64_t>(layer.c_in) * layer.kernel * layer.kernel * layer.c_out * out[1] * out[2];
    }
    default:
      return 0;
  }
}

std::uint64_t count_macs(const NetworkSpec& net) {
  std::uint64_t total = 0;
  std::vector<Shape> outs;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    Shape shape = net.input_shapes.at(b);
    for (const auto& layer : net.branches[b]) {
      total += count_macs(layer, shape);
      shape = layer.output_shape(shape);
    }
    outs.push_back(shape);
  }
  if (net.fused()) {
    std::size_t width = 0;
    for (const auto& s : outs) width += shape_size(s);
    Shape shape{width};
    for (const auto& layer : net.head) {
      total += count_macs(layer, shape);
      shape = layer.output_shape(shape);
    }
  }
  return total;
}

}  // namespace xbar::nn
