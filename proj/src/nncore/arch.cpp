#include "xbar/nncore/arch.hpp"

#include <charconv>

#include "xbar/errors.hpp"

namespace xbar::nn {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::size_t parse_count(std::string_view token, std::string_view arch) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || value == 0)
    throw InvalidInput("bad token '" + std::string(token) + "' in architecture '" + std::string(arch) + "'");
  return value;
}

bool is_plain_number(std::string_view token) {
  return !token.empty() && token.find_first_not_of("0123456789") == std::string_view::npos;
}

}  // namespace

LayerSeq parse_arch(std::string_view arch, Shape& input_shape, Tail tail) {
  auto tokens = split(arch, '-');
  if (tokens.empty() || tokens.front().empty()) throw InvalidInput("empty architecture string");

  if (is_plain_number(tokens.front())) {
    const std::size_t width = parse_count(tokens.front(), arch);
    if (!input_shape.empty() && shape_size(input_shape) != width)
      throw InvalidInput("architecture '" + std::string(arch) + "' expects " + std::to_string(width) +
                         " inputs, input shape is " + shape_string(input_shape));
    if (input_shape.empty()) input_shape = {width};
    tokens.erase(tokens.begin());
  } else if (input_shape.empty()) {
    throw InvalidInput("architecture '" + std::string(arch) + "' needs an explicit input shape");
  }
  if (tokens.empty()) throw InvalidInput("architecture '" + std::string(arch) + "' has no layers");

  LayerSeq seq;
  Shape shape = input_shape;
  for (auto token : tokens) {
    LayerSpec layer;
    if (const auto c = token.find('c'); c != std::string_view::npos) {
      if (shape.size() != 3) throw InvalidInput("conv token '" + std::string(token) + "' after flattening");
      layer = LayerSpec::conv2d(shape[0], parse_count(token.substr(0, c), arch), parse_count(token.substr(c + 1), arch));
    } else if (token.back() == 'p') {
      layer = LayerSpec::maxpool(parse_count(token.substr(0, token.size() - 1), arch));
    } else {
      layer = LayerSpec::dense(shape_size(shape), parse_count(token, arch));
    }
    shape = layer.output_shape(shape);
    seq.push_back(std::move(layer));
    if (seq.back().has_params()) seq.push_back(LayerSpec::relu());
  }
  if (seq.size() < 2 || !seq[seq.size() - 2].has_params())
    throw InvalidInput("architecture '" + std::string(arch) + "' must end with a weighted layer");
  if (tail == Tail::softmax) seq.back() = LayerSpec::softmax();
  return seq;
}

NetworkSpec make_network(std::string_view arch, Shape input_shape, std::size_t replicas) {
  NetworkSpec net;
  net.branches.push_back(parse_arch(arch, input_shape, Tail::softmax));
  net.input_shapes.push_back(std::move(input_shape));
  net.replicas.push_back(replicas);
  net.validate();
  return net;
}

NetworkSpec make_fused(const std::vector<BranchArch>& branches, std::size_t head_out) {
  if (branches.size() != 2) throw InvalidInput("fused network needs exactly two branches");
  NetworkSpec net;
  for (const auto& b : branches) {
    Shape shape = b.input_shape;
    net.branches.push_back(parse_arch(b.arch, shape, Tail::relu));
    net.input_shapes.push_back(std::move(shape));
    net.replicas.push_back(b.replicas);
  }
  std::size_t width = 0;
  for (const auto& s : net.branch_output_shapes()) width += shape_size(s);
  net.head = {LayerSpec::dense(width, head_out), LayerSpec::softmax()};
  net.validate();
  return net;
}

std::string layer_string(const LayerSeq& seq) {
  std::string out;
  for (const auto& l : seq) {
    std::string token;
    switch (l.kind) {
      case LayerKind::dense:
        if (out.empty()) token = std::to_string(l.in) + "-";
        token += std::to_string(l.out);
        break;
      case LayerKind::conv2d:
        token = std::to_string(l.c_out) + "c" + std::to_string(l.kernel);
        break;
      case LayerKind::maxpool:
        token = std::to_string(l.pool) + "p";
        break;
      default:
        continue;
    }
    if (!out.empty()) out += '-';
    out += token;
  }
  return out;
}

}  // namespace xbar::nn
