#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "xbar/errors.hpp"
#include "xbar/memsim/crossbar.hpp"
#include "xbar/memsim/device.hpp"
#include "xbar/memsim/mapping.hpp"
#include "xbar/nncore/arch.hpp"
#include "xbar/nncore/train.hpp"

using namespace xbar;
using namespace xbar::mem;
using xbar::testing::random_tensor;

TEST(Device, ZeroSigmaIsNominal) {
  DeviceConfig cfg;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const DevicePair p = sample_device_pair(cfg, i);
    EXPECT_EQ(p.r_on, 100.0);
    EXPECT_EQ(p.r_off, 2500.0);
  }
}

TEST(Device, MonteCarloMomentsAtSigma100) {
  DeviceConfig cfg;
  cfg.sigma = 100.0;
  cfg.seed = 42;
  const int n = 100000;
  double s_on = 0, s_off = 0, q_on = 0, q_off = 0;
  for (int i = 0; i < n; ++i) {
    const DevicePair p = sample_unclamped(cfg, static_cast<std::uint64_t>(i));
    s_on += p.r_on;
    s_off += p.r_off;
    q_on += p.r_on * p.r_on;
    q_off += p.r_off * p.r_off;
  }
  const double m_on = s_on / n, m_off = s_off / n;
  const double sd_on = std::sqrt(q_on / n - m_on * m_on), sd_off = std::sqrt(q_off / n - m_off * m_off);
  EXPECT_NEAR(m_on, 100.0, 2.0);
  EXPECT_NEAR(m_off, 2500.0, 50.0);
  EXPECT_NEAR(sd_on, 100.0, 3.0);
  EXPECT_NEAR(sd_off, 200.0, 6.0);
}

TEST(Device, DrawsArePositiveAndOrdered) {
  DeviceConfig cfg;
  cfg.sigma = 500.0;
  cfg.seed = 3;
  for (std::uint64_t i = 0; i < 50000; ++i) {
    const DevicePair p = sample_device_pair(cfg, i);
    ASSERT_GE(p.r_on, 1.0);
    ASSERT_GT(p.r_off, p.r_on);
  }
  cfg.sigma = 5000.0;  // forces frequent double clamps
  for (std::uint64_t i = 0; i < 20000; ++i) {
    const DevicePair p = sample_device_pair(cfg, i);
    ASSERT_GE(p.r_on, 1.0);
    ASSERT_GT(p.r_off, p.r_on);
  }
}

TEST(Device, StableAddressing) {
  DeviceConfig cfg;
  cfg.sigma = 20.0;
  cfg.seed = 9;
  const DevicePair a = sample_device_pair(cfg, 123456);
  for (std::uint64_t i = 0; i < 100; ++i) sample_device_pair(cfg, i);
  const DevicePair b = sample_device_pair(cfg, 123456);
  EXPECT_EQ(a.r_on, b.r_on);
  EXPECT_EQ(a.r_off, b.r_off);
  cfg.seed = 10;
  EXPECT_NE(sample_device_pair(cfg, 123456).r_on, a.r_on);
}

TEST(Device, ConfigValidation) {
  DeviceConfig cfg;
  cfg.r_on_mean = 3000;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.sigma = -1;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.positivity_floor = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(MapWeight, ZeroWeight) {
  const WeightMapping m = map_weight(0.0, 1.0, 1e-2, 4e-4);
  EXPECT_EQ(m.g_pos, 4e-4);
  EXPECT_EQ(m.g_neg, 4e-4);
  EXPECT_EQ(m.g_pos - m.g_neg, 0.0);
}

TEST(MapWeight, FullScaleAndMirror) {
  const WeightMapping p = map_weight(0.7, 0.7, 1e-2, 4e-4);
  EXPECT_DOUBLE_EQ(p.g_pos, 1e-2);
  EXPECT_EQ(p.g_neg, 4e-4);
  const WeightMapping n = map_weight(-0.7, 0.7, 1e-2, 4e-4);
  EXPECT_EQ(n.g_pos, p.g_neg);
  EXPECT_EQ(n.g_neg, p.g_pos);
  EXPECT_FALSE(p.clipped);
}

TEST(MapWeight, DifferentialProportionalToWeight) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double w = rng.uniform(-2, 2);
    const WeightMapping m = map_weight(w, 2.0, 1e-2, 4e-4);
    EXPECT_NEAR(m.g_pos - m.g_neg, w / 2.0 * (1e-2 - 4e-4), 1e-17);
  }
}

TEST(MapWeight, ClipsAndRejects) {
  const WeightMapping m = map_weight(5.0, 1.0, 1e-2, 4e-4);
  EXPECT_TRUE(m.clipped);
  EXPECT_DOUBLE_EQ(m.g_pos, 1e-2);
  EXPECT_THROW(map_weight(0.1, 0.0, 1e-2, 4e-4), InvalidInput);
}

TEST(QuantizeState, UnboundedIsIdentity) {
  EXPECT_EQ(quantize_state(3.3e-3, std::nullopt, 4e-4, 1e-2), 3.3e-3);
}

TEST(QuantizeState, FiveLevelGrid) {
  const std::vector<double> states{4e-4, 2.8e-3, 5.2e-3, 7.6e-3, 1e-2};
  for (double s : states) EXPECT_NEAR(quantize_state(s, 5, 4e-4, 1e-2), s, 1e-18);
  EXPECT_NEAR(quantize_state(3e-3, 5, 4e-4, 1e-2), 2.8e-3, 1e-18);
  EXPECT_EQ(quantize_state(-1.0, 5, 4e-4, 1e-2), 4e-4);
  EXPECT_EQ(quantize_state(1.0, 5, 4e-4, 1e-2), 1e-2);
}

TEST(QuantizeState, TiesRoundTowardOff) {
  EXPECT_EQ(quantize_state(1.5, 3, 1.0, 3.0), 1.0);
  EXPECT_EQ(quantize_state(2.5, 3, 1.0, 3.0), 2.0);
}

TEST(QuantizeState, IdempotentProjection) {
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const double g = rng.uniform(0.0, 1.2e-2);
    const std::size_t n = 2 + rng.below(300);
    const double q = quantize_state(g, n, 4e-4, 1e-2);
    EXPECT_EQ(quantize_state(q, n, 4e-4, 1e-2), q);
    EXPECT_GE(q, 4e-4);
    EXPECT_LE(q, 1e-2);
  }
}

namespace {

CrossbarTile uniform_tile(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor g({rows, cols}), hi({rows, cols}, 1e-2), lo({rows, cols}, 4e-4);
  for (double& v : g.values()) v = rng.uniform(4e-4, 1e-2);
  return CrossbarTile(std::move(g), std::move(hi), std::move(lo));
}

}  // namespace

TEST(Crossbar, ZeroVoltsZeroCurrent) {
  Rng rng(3);
  const CrossbarTile t = uniform_tile(4, 3, rng);
  for (double i : crossbar_vmm(std::vector<double>(4, 0.0), t)) EXPECT_EQ(i, 0.0);
}

TEST(Crossbar, OhmsLawSingleCell) {
  const CrossbarTile t(Tensor({1, 1}, 1e-2), Tensor({1, 1}, 1e-2), Tensor({1, 1}, 4e-4));
  EXPECT_NEAR(crossbar_vmm(std::vector{0.3}, t)[0], 3e-3, 1e-18);
}

TEST(Crossbar, MatchesMatvecOracle) {
  Rng rng(4);
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{2, 2}, {256, 64}, {17, 5}}) {
    const CrossbarTile t = uniform_tile(rows, cols, rng);
    std::vector<double> v(rows);
    for (double& x : v) x = rng.uniform(-0.3, 0.3);
    // oracle works on the transpose: i = G^T v
    std::vector<double> gt(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) gt[c * rows + r] = t.conductance().at(r, c);
    const auto want = xbar::testing::matvec(gt, cols, rows, v);
    const auto got = crossbar_vmm(v, t);
    for (std::size_t c = 0; c < cols; ++c) {
      double scale = 0.0;
      for (std::size_t r = 0; r < rows; ++r) scale += std::abs(v[r] * t.conductance().at(r, c));
      EXPECT_LE(std::abs(got[c] - want[c]), 1e-15 * scale);
    }
  }
}

TEST(Crossbar, RejectsBadTiles) {
  EXPECT_THROW(CrossbarTile(Tensor({257, 1}, 1e-3), Tensor({257, 1}, 1e-2), Tensor({257, 1}, 4e-4)), InvalidInput);
  EXPECT_THROW(CrossbarTile(Tensor({1, 65}, 1e-3), Tensor({1, 65}, 1e-2), Tensor({1, 65}, 4e-4)), InvalidInput);
  EXPECT_THROW(CrossbarTile(Tensor({1, 1}, 2e-2), Tensor({1, 1}, 1e-2), Tensor({1, 1}, 4e-4)), InvalidInput);
  Rng rng(5);
  const CrossbarTile t = uniform_tile(3, 2, rng);
  EXPECT_THROW(crossbar_vmm(std::vector<double>(2, 0.1), t), InvalidInput);
}

TEST(Adc, ZeroCodeAndSaturation) {
  AdcConfig adc;
  adc.i_fullscale = 2.0;
  EXPECT_EQ(adc_read(0.0, adc), 0.0);
  EXPECT_EQ(adc_read(2.0, adc), 2.0);
  EXPECT_EQ(adc_read(5.0, adc), 2.0);
  EXPECT_EQ(adc_read(-5.0, adc), -2.0);
  adc.mode = AdcMode::per_column;
  EXPECT_EQ(adc_read(-1.0, adc), 0.0);
  EXPECT_EQ(adc_read(2.0, adc), 2.0);
}

TEST(Adc, EightBitHalfScale) {
  AdcConfig adc;
  adc.bits = 8;
  adc.i_fullscale = 1.0;
  EXPECT_NEAR(adc_read(0.5, adc), 127.0 / 255.0, 1e-15);
  EXPECT_NEAR(adc_read(0.5, adc), 0.49803, 1e-5);
}

TEST(Adc, ErrorBoundedByFullscaleOverTwoToBits) {
  Rng rng(6);
  for (int i = 0; i < 20000; ++i) {
    AdcConfig adc;
    adc.bits = 1 + static_cast<int>(rng.below(12));
    adc.i_fullscale = rng.uniform(1e-6, 1.0);
    adc.mode = rng.below(2) ? AdcMode::per_column : AdcMode::per_pair_differential;
    const double lo = adc.mode == AdcMode::per_column ? 0.0 : -adc.i_fullscale;
    const double x = rng.uniform(lo, adc.i_fullscale);
    ASSERT_LE(std::abs(adc_read(x, adc) - x), adc.i_fullscale / std::ldexp(1.0, adc.bits) * (1 + 1e-12));
  }
}

TEST(Adc, DisabledPassesThrough) {
  AdcConfig adc;
  adc.enabled = false;
  EXPECT_EQ(adc_read(0.123456789, adc), 0.123456789);
}

TEST(AffineFit, IdentityAndExactRecovery) {
  std::vector<double> raw{-1, 0.5, 2, 3.25};
  AffineFit f = fit_affine_tuning(raw, raw);
  EXPECT_DOUBLE_EQ(f.a, 1.0);
  EXPECT_NEAR(f.b, 0.0, 1e-15);
  std::vector<double> ideal;
  for (double r : raw) ideal.push_back(2 * r + 3);
  f = fit_affine_tuning(ideal, raw);
  EXPECT_NEAR(f.a, 2.0, 1e-14);
  EXPECT_NEAR(f.b, 3.0, 1e-14);
  EXPECT_FALSE(f.degenerate);
}

TEST(AffineFit, NoisyDataRecoversSlope) {
  Rng rng(7);
  std::vector<double> raw, ideal;
  for (int i = 0; i < 10000; ++i) {
    const double r = rng.uniform(0.0, 10.0);
    raw.push_back(r);
    ideal.push_back(1.7 * r - 0.4 + rng.normal(0.0, 0.01 * 17.0));
  }
  const AffineFit f = fit_affine_tuning(ideal, raw);
  EXPECT_NEAR(f.a, 1.7, 0.017);
}

TEST(AffineFit, ConstantRawIsDegenerate) {
  const AffineFit f = fit_affine_tuning(std::vector{1.0, 2.0, 6.0}, std::vector{4.0, 4.0, 4.0});
  EXPECT_TRUE(f.degenerate);
  EXPECT_EQ(f.a, 0.0);
  EXPECT_DOUBLE_EQ(f.b, 3.0);
  EXPECT_THROW(fit_affine_tuning(std::vector{1.0}, std::vector{1.0}), InvalidInput);
  EXPECT_THROW(fit_affine_tuning(std::vector{1.0, 2.0}, std::vector{1.0}), InvalidInput);
}

namespace {

std::vector<std::vector<Tensor>> random_inputs(const Shape& shape, std::size_t n, Rng& rng) {
  std::vector<std::vector<Tensor>> xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back({random_tensor(shape, rng, -2, 2)});
  return xs;
}

DeviceConfig ideal_device() {
  DeviceConfig cfg;
  cfg.n_states = std::nullopt;
  return cfg;
}

ConversionOptions no_adc() {
  ConversionOptions o;
  o.adc_enabled = false;
  return o;
}

std::vector<double> logits_of(const Tensor& probs) {
  std::vector<double> z;
  for (double p : probs.values()) z.push_back(std::log(p));
  return z;
}

}  // namespace

TEST(Convert, IdealDeviceMatchesFloatOutputs) {
  Rng rng(8);
  for (auto [arch, shape] : std::vector<std::pair<std::string, Shape>>{
           {"16-230-5", {}}, {"300-20-5", {}}, {"4c3-2p-6", {1, 10, 10}}}) {
    nn::NetworkSpec net = nn::make_network(arch, shape);
    nn::init_params(net, 1);
    for (auto& l : net.branches[0])
      if (l.has_params())
        for (double& b : l.bias.values()) b = rng.uniform(-0.5, 0.5);
    const auto xs = random_inputs(net.input_shapes[0], 200, rng);
    const MappedNetwork m = convert_network(net, ideal_device(), xs, no_adc());
    for (const auto& x : xs) {
      const auto want = logits_of(nn::forward(net, x));
      const auto got = logits_of(mapped_forward(m, x));
      ASSERT_EQ(nn::argmax(want), nn::argmax(got));
      for (std::size_t k = 0; k < want.size(); ++k)
        EXPECT_NEAR(got[k] - got[0], want[k] - want[0], 1e-6 * (1 + std::abs(want[k] - want[0])));
    }
  }
}

TEST(Convert, TileCountForMlpFirstLayer) {
  nn::NetworkSpec net = nn::make_network("16-230-5");
  nn::init_params(net, 2);
  Rng rng(9);
  ConversionSummary s;
  convert_network(net, DeviceConfig{}, random_inputs({16}, 4, rng), {}, &s);
  ASSERT_EQ(s.layers.size(), 2u);
  EXPECT_EQ(s.layers[0].tiles, 8u);
  EXPECT_EQ(s.layers[1].tiles, 2u);
  EXPECT_EQ(s.clipped_total, 0u);
}

TEST(Convert, LargeFanInSplitsAcrossRowBlocks) {
  nn::NetworkSpec net = nn::make_network("600-3");
  nn::init_params(net, 3);
  Rng rng(10);
  const MappedNetwork m = convert_network(net, DeviceConfig{}, random_inputs({600}, 4, rng));
  const auto& layer = std::get<MappedLayer>(m.branches[0][0]);
  EXPECT_EQ(layer.row_blocks, 3u);
  EXPECT_EQ(layer.pos_tiles[0].rows(), 256u);
  EXPECT_EQ(layer.pos_tiles[2].rows(), 88u);
  EXPECT_EQ(layer.adc.size(), 3u);
  EXPECT_DOUBLE_EQ(layer.adc[2].i_fullscale, 88 * 0.3 * 1e-2);
}

TEST(Convert, DeterministicForFixedSeed) {
  nn::NetworkSpec net = nn::make_network("2c3-5", {1, 6, 6});
  nn::init_params(net, 4);
  Rng rng(11);
  const auto xs = random_inputs({1, 6, 6}, 8, rng);
  DeviceConfig cfg;
  cfg.sigma = 150;
  cfg.seed = 77;
  const MappedNetwork a = convert_network(net, cfg, xs), b = convert_network(net, cfg, xs);
  for (std::size_t s = 0; s < a.branches[0].size(); ++s) {
    const auto* la = std::get_if<MappedLayer>(&a.branches[0][s]);
    if (!la) continue;
    const auto& lb = std::get<MappedLayer>(b.branches[0][s]);
    for (std::size_t t = 0; t < la->pos_tiles.size(); ++t) {
      EXPECT_EQ(la->pos_tiles[t].conductance(), lb.pos_tiles[t].conductance());
      EXPECT_EQ(la->neg_tiles[t].conductance(), lb.neg_tiles[t].conductance());
    }
    EXPECT_EQ(la->tuning_a, lb.tuning_a);
  }
  for (const auto& x : xs) EXPECT_EQ(mapped_forward(a, x), mapped_forward(b, x));
  cfg.seed = 78;
  const MappedNetwork c = convert_network(net, cfg, xs);
  EXPECT_NE(std::get<MappedLayer>(c.branches[0][0]).pos_tiles[0].conductance(),
            std::get<MappedLayer>(a.branches[0][0]).pos_tiles[0].conductance());
}

TEST(Convert, ConductancesStayInsideDeviceBounds) {
  nn::NetworkSpec net = nn::make_network("20-30-5");
  nn::init_params(net, 5);
  Rng rng(12);
  for (double sigma : {0.0, 100.0, 500.0}) {
    for (std::optional<std::size_t> states : {std::optional<std::size_t>{}, std::optional<std::size_t>{4}}) {
      DeviceConfig cfg;
      cfg.sigma = sigma;
      cfg.n_states = states;
      const MappedNetwork m = convert_network(net, cfg, random_inputs({20}, 4, rng));
      for (const auto& stage : m.branches[0]) {
        const auto* l = std::get_if<MappedLayer>(&stage);
        if (!l) continue;
        for (const auto* tiles : {&l->pos_tiles, &l->neg_tiles})
          for (const auto& t : *tiles)
            for (std::size_t i = 0; i < t.conductance().size(); ++i) {
              ASSERT_GE(t.conductance()[i], t.g_off()[i]);
              ASSERT_LE(t.conductance()[i], t.g_on()[i]);
            }
      }
    }
  }
}

TEST(Convert, RejectsEmptyCalibration) {
  nn::NetworkSpec net = nn::make_network("4-2");
  EXPECT_THROW(convert_network(net, DeviceConfig{}, std::vector<std::vector<Tensor>>{}), InvalidInput);
}

TEST(MappedForward, IdealArgmaxAgreesOnThousandInputs) {
  nn::NetworkSpec net = nn::make_network("16-230-5");
  nn::init_params(net, 6);
  Rng rng(13);
  const auto xs = random_inputs({16}, 1000, rng);
  const MappedNetwork m = convert_network(net, ideal_device(), xs, no_adc());
  for (const auto& x : xs) ASSERT_EQ(mapped_predict(m, x), nn::predict(net, x));
}

TEST(MappedForward, ZeroInputGivesBiasWithinAdcStep) {
  nn::NetworkSpec net = nn::make_network("16-5");
  nn::init_params(net, 7);
  Rng rng(14);
  for (double& b : net.branches[0][0].bias.values()) b = rng.uniform(-1, 1);
  const MappedNetwork m = convert_network(net, DeviceConfig{}, random_inputs({16}, 64, rng));
  const auto& l = std::get<MappedLayer>(m.branches[0][0]);
  const double step_weight = l.adc[0].step() * l.input_scale * l.scale_k / m.v_read;
  const Tensor zero({16});
  const auto got = logits_of(mapped_forward(m, std::vector{zero}));
  const auto want = logits_of(nn::forward(net, std::vector{zero}));
  for (std::size_t k = 1; k < 5; ++k) EXPECT_NEAR(got[k] - got[0], want[k] - want[0], 2 * step_weight);
}

TEST(MappedForward, LargeSigmaStaysFinite) {
  nn::NetworkSpec net = nn::make_network("3c3-2p-10", {1, 8, 8});
  nn::init_params(net, 8);
  Rng rng(15);
  DeviceConfig cfg;
  cfg.sigma = 500;
  cfg.seed = 5;
  const auto xs = random_inputs({1, 8, 8}, 16, rng);
  const MappedNetwork m = convert_network(net, cfg, xs);
  for (const auto& x : xs) {
    const Tensor p = mapped_forward(m, x);
    double sum = 0;
    for (double v : p.values()) {
      ASSERT_TRUE(v >= 0.0 && v <= 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(MappedForward, PerColumnModeAlsoIdealWhenBypassed) {
  nn::NetworkSpec net = nn::make_network("8-6-3");
  nn::init_params(net, 9);
  Rng rng(16);
  const auto xs = random_inputs({8}, 50, rng);
  ConversionOptions opts = no_adc();
  opts.adc_mode = AdcMode::per_column;
  const MappedNetwork m = convert_network(net, ideal_device(), xs, opts);
  for (const auto& x : xs) {
    const Tensor a = mapped_forward(m, x), b = nn::forward(net, x);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
  }
}

TEST(MappedForward, FusedNetworkIdealEquivalence) {
  nn::NetworkSpec net = nn::make_fused({{"6-8-5", {}, 1}, {"2c3-5", {1, 5, 5}, 1}}, 5);
  nn::init_params(net, 10);
  Rng rng(17);
  std::vector<std::vector<Tensor>> xs;
  for (int i = 0; i < 100; ++i) xs.push_back({random_tensor({6}, rng), random_tensor({1, 5, 5}, rng)});
  const MappedNetwork m = convert_network(net, ideal_device(), xs, no_adc());
  for (const auto& x : xs) ASSERT_EQ(mapped_predict(m, x), nn::predict(net, x));
}
