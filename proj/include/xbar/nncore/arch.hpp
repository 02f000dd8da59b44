#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xbar/nncore/network.hpp"

namespace xbar::nn {

/// How a parsed layer string ends: a classifier output, or a hidden branch
/// feeding a fusion head (ReLU after the last dense layer).
enum class Tail { softmax, relu };

/// Parses the compact architecture grammar used for benchmark networks:
/// "16-230-5" (first token is the input width) or "8c3-2p-16c3-2p-32c3-512-5"
/// (input shape supplied separately). "Nc K" is a conv with N filters of size
/// K, "Pp" is a P x P max pool, a bare integer is a dense layer. ReLU follows
/// every weighted layer except the output.
LayerSeq parse_arch(std::string_view arch, Shape& input_shape, Tail tail = Tail::softmax);

/// Single-branch classifier. For MLP strings input_shape may be empty.
NetworkSpec make_network(std::string_view arch, Shape input_shape = {}, std::size_t replicas = 1);

struct BranchArch {
  std::string arch;
  Shape input_shape;
  std::size_t replicas = 1;
};

/// Two branches fused by one dense layer of head_out neurons.
NetworkSpec make_fused(const std::vector<BranchArch>& branches, std::size_t head_out);

/// Inverse of parse_arch for a branch. A dense-first branch leads with its
/// input width ("16-230-5"); a conv-first branch needs the shape separately.
std::string layer_string(const LayerSeq& seq);

}  // namespace xbar::nn
