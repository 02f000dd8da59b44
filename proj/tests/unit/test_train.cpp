#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "xbar/errors.hpp"
#include "xbar/nncore/arch.hpp"
#include "xbar/nncore/layers.hpp"
#include "xbar/nncore/train.hpp"

using namespace xbar;
using namespace xbar::nn;
using xbar::testing::random_tensor;

namespace {

// Two Gaussian blobs at (+-2, +-2), std 0.5.
std::vector<Example> blobs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Example> data;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    const double c = label ? 2.0 : -2.0;
    data.push_back({{Tensor::vector({c + rng.normal(0, 0.5), c + rng.normal(0, 0.5)})}, label});
  }
  return data;
}

// Plain logistic regression by batch gradient descent; an independent
// baseline showing the blobs are linearly separable.
double logistic_regression_accuracy(const std::vector<Example>& data) {
  double w0 = 0, w1 = 0, b = 0;
  for (int it = 0; it < 500; ++it) {
    double g0 = 0, g1 = 0, gb = 0;
    for (const auto& ex : data) {
      const double z = w0 * ex.inputs[0][0] + w1 * ex.inputs[0][1] + b;
      const double err = 1.0 / (1.0 + std::exp(-z)) - static_cast<double>(ex.label);
      g0 += err * ex.inputs[0][0];
      g1 += err * ex.inputs[0][1];
      gb += err;
    }
    const double n = static_cast<double>(data.size());
    w0 -= 0.1 * g0 / n;
    w1 -= 0.1 * g1 / n;
    b -= 0.1 * gb / n;
  }
  std::size_t ok = 0;
  for (const auto& ex : data)
    ok += ((w0 * ex.inputs[0][0] + w1 * ex.inputs[0][1] + b) > 0) == (ex.label == 1);
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

}  // namespace

TEST(Train, ZeroLearningRateLeavesWeightsUnchanged) {
  NetworkSpec net = make_network("2-4-2");
  init_params(net, 1);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  const auto data = blobs(40, 2);
  EXPECT_EQ(train_sgd(net, data, cfg).net, net);
}

TEST(Train, SeparableBlobsReachHighAccuracy) {
  const auto data = blobs(200, 3);
  ASSERT_GE(logistic_regression_accuracy(data), 0.95);
  NetworkSpec net = make_network("2-2");
  init_params(net, 4);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 0.1;
  const TrainResult r = train_sgd(net, data, cfg);
  EXPECT_GE(accuracy(r.net, data), 0.95);
  EXPECT_LE(r.log.epoch_loss.back(), r.log.epoch_loss.front());
}

TEST(Train, FixedSeedIsBitReproducible) {
  const auto data = blobs(64, 5);
  NetworkSpec net = make_network("2-8-8-2");
  init_params(net, 6);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 99;
  const TrainResult a = train_sgd(net, data, cfg);
  const TrainResult b = train_sgd(net, data, cfg);
  EXPECT_EQ(a.net, b.net);
  EXPECT_EQ(a.log.epoch_loss, b.log.epoch_loss);
  cfg.seed = 100;
  EXPECT_NE(train_sgd(net, data, cfg).net, a.net);
}

TEST(Train, NonFiniteLossAborts) {
  const auto data = blobs(16, 7);
  NetworkSpec net = make_network("2-16-2");
  init_params(net, 8);
  TrainConfig cfg;
  cfg.learning_rate = 1e200;
  cfg.epochs = 5;
  try {
    train_sgd(net, data, cfg);
    FAIL() << "expected NumericFault";
  } catch (const NumericFault& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Train, RejectsBadInputs) {
  NetworkSpec net = make_network("2-2");
  TrainConfig cfg;
  EXPECT_THROW(train_sgd(net, {}, cfg), InvalidInput);
  std::vector<Example> bad{{{Tensor::vector({0, 0})}, 7}};
  EXPECT_THROW(train_sgd(net, bad, cfg), InvalidInput);
  cfg.batch_size = 0;
  EXPECT_THROW(train_sgd(net, blobs(4, 1), cfg), InvalidInput);
}

TEST(GradCheck, SmallMlp) {
  NetworkSpec net = make_network("2-3-2");
  Rng rng(10);
  xbar::testing::randomize(net, rng);
  const Example ex{{random_tensor({2}, rng)}, 1};
  EXPECT_LT(grad_check(net, ex, 1e-5), 1e-4);
}

TEST(GradCheck, TwentyRandomNets) {
  Rng rng(11);
  const std::vector<std::pair<std::string, Shape>> archs = {
      {"3-4-2", {}}, {"5-3-3-4", {}}, {"2c2-3", {1, 4, 4}}, {"2c2-2p-3", {1, 5, 5}}, {"3c1-2c2-2", {2, 3, 3}}};
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto& [arch, shape] = archs[static_cast<std::size_t>(i) % archs.size()];
    NetworkSpec net = make_network(arch, shape);
    xbar::testing::randomize(net, rng);
    const Shape in = net.input_shapes[0];
    const Example ex{{random_tensor(in, rng)}, rng.below(net.class_count())};
    worst = std::max(worst, grad_check(net, ex, 1e-5));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(GradCheck, FusedNetwork) {
  NetworkSpec net = make_fused({{"3-4", {}, 1}, {"2c2-3", {1, 3, 3}, 1}}, 3);
  Rng rng(12);
  xbar::testing::randomize(net, rng);
  const Example ex{{random_tensor({3}, rng), random_tensor({1, 3, 3}, rng)}, 2};
  EXPECT_LT(grad_check(net, ex, 1e-5), 1e-4);
}

TEST(GradCheck, ConvOneByOneByTwoByTwo) {
  NetworkSpec net = make_network("1c2-2", {1, 3, 3});
  Rng rng(13);
  xbar::testing::randomize(net, rng);
  const Example ex{{random_tensor({1, 3, 3}, rng)}, 0};
  EXPECT_EQ(net.branches[0][0].weights.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_LT(grad_check(net, ex, 1e-5), 1e-4);
}

TEST(GradCheck, ZeroFinalWeightsGiveSoftmaxMinusOnehot) {
  NetworkSpec net = make_network("3-4-3");
  Rng rng(14);
  xbar::testing::randomize(net, rng);
  auto& out = net.branches[0][2];
  for (double& w : out.weights.values()) w = 0.0;
  const Example ex{{random_tensor({3}, rng)}, 1};
  const Gradients g = loss_gradients(net, ex);
  const Tensor expected = softmax_ce_grad(out.bias, 1);
  const Tensor p = softmax_forward(out.bias);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(g.biases[1][i], expected[i], 1e-15);
    EXPECT_NEAR(expected[i], p[i] - (i == 1 ? 1.0 : 0.0), 1e-15);
  }
}

TEST(GradCheck, EpsilonOutsideRangeRejected) {
  NetworkSpec net = make_network("2-2");
  const Example ex{{Tensor::vector({1, 2})}, 0};
  EXPECT_THROW(grad_check(net, ex, 1e-2), InvalidInput);
  EXPECT_THROW(grad_check(net, ex, 1e-9), InvalidInput);
}
