#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "xbar/nncore/network.hpp"

namespace xbar::nn {

/// One labeled sample: one input tensor per branch.
struct Example {
  std::vector<Tensor> inputs;
  std::size_t label = 0;
};

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  /// Inverted-dropout rate after hidden ReLUs that feed another dense layer.
  /// Training only; inference never drops.
  double dropout_rate = 0.25;

  void validate() const;
};

struct TrainLog {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;
};

struct TrainResult {
  NetworkSpec net;
  TrainLog log;
};

/// Gradients for every weighted layer, in for_each_layer order.
struct Gradients {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
};

/// He-normal weights, zero biases, from a seeded stream.
void init_params(NetworkSpec& net, std::uint64_t seed);

/// Categorical cross-entropy of the network output against `label`.
double cross_entropy(const NetworkSpec& net, const Example& example);

/// Analytic gradient of the cross-entropy by backpropagation (no dropout).
Gradients loss_gradients(const NetworkSpec& net, const Example& example, double* loss = nullptr);

/// d(cross-entropy)/d(logits) for a softmax output: softmax(logits) - onehot.
Tensor softmax_ce_grad(const Tensor& logits, std::size_t label);

/// Mini-batch SGD on categorical cross-entropy. Deterministic given cfg.seed.
/// Throws NumericFault if the loss becomes non-finite.
TrainResult train_sgd(NetworkSpec net, std::span<const Example> data, const TrainConfig& cfg);

/// Largest relative difference between backprop and central finite
/// differences over every parameter: |a - n| / max(|a| + |n|, 1e-6).
double grad_check(const NetworkSpec& net, const Example& example, double eps);

double accuracy(const NetworkSpec& net, std::span<const Example> data);

}  // namespace xbar::nn
