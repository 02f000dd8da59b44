#include "xbar/nncore/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "xbar/errors.hpp"
#include "xbar/nncore/layers.hpp"
#include "xbar/rng.hpp"

namespace xbar::nn {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidInput("learning_rate must be >= 0");
  if (epochs == 0) throw InvalidInput("epochs must be >= 1");
  if (batch_size == 0) throw InvalidInput("batch_size must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidInput("dropout_rate must lie in [0, 1)");
}

namespace {

struct LayerTrace {
  Tensor input;
  Tensor cols;
  std::vector<std::size_t> argmax;
  std::vector<double> mask;
};

struct SeqTrace {
  std::vector<LayerTrace> layers;
};

struct NetTrace {
  std::vector<SeqTrace> branches;
  SeqTrace head;
  std::vector<Shape> branch_out_shapes;
};

struct DropoutCtx {
  Rng* rng = nullptr;
  double rate = 0.0;
};

Tensor conv_from_cols(const Tensor& cols, const LayerSpec& layer, std::size_t oh, std::size_t ow) {
  const std::size_t positions = cols.dim(0), patch = cols.dim(1);
  Tensor out({layer.c_out, oh, ow});
  for (std::size_t co = 0; co < layer.c_out; ++co) {
    const double* wrow = layer.weights.storage().data() + co * patch;
    for (std::size_t p = 0; p < positions; ++p) {
      const double* prow = cols.storage().data() + p * patch;
      double acc = 0.0;
      for (std::size_t j = 0; j < patch; ++j) acc += wrow[j] * prow[j];
      out[co * positions + p] = acc + layer.bias[co];
    }
  }
  return out;
}

// Runs a sequence up to (not including) a trailing softmax.
Tensor forward_seq(const LayerSeq& seq, Tensor x, SeqTrace& trace, const DropoutCtx& drop) {
  trace.layers.assign(seq.size(), {});
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const LayerSpec& layer = seq[i];
    LayerTrace& t = trace.layers[i];
    if (layer.kind == LayerKind::softmax) break;
    t.input = x;
    switch (layer.kind) {
      case LayerKind::dense:
        x = dense_forward(x, layer);
        break;
      case LayerKind::conv2d: {
        const std::size_t oh = x.dim(1) - layer.kernel + 1, ow = x.dim(2) - layer.kernel + 1;
        t.cols = im2col(x, layer.kernel);
        x = conv_from_cols(t.cols, layer, oh, ow);
        break;
      }
      case LayerKind::maxpool:
        x = maxpool_forward(x, layer.pool, &t.argmax);
        break;
      case LayerKind::relu: {
        x = relu_forward(x);
        const bool feeds_dense = i + 1 < seq.size() && seq[i + 1].kind == LayerKind::dense;
        if (drop.rng && drop.rate > 0.0 && feeds_dense) {
          const double keep = 1.0 - drop.rate;
          t.mask.resize(x.size());
          for (std::size_t j = 0; j < x.size(); ++j) {
            t.mask[j] = drop.rng->uniform() < keep ? 1.0 / keep : 0.0;
            x[j] *= t.mask[j];
          }
        }
        break;
      }
      case LayerKind::softmax:
        break;
    }
  }
  return x;
}

// Accumulates parameter gradients; returns the gradient w.r.t. the sequence input.
Tensor backward_seq(const LayerSeq& seq, const SeqTrace& trace, Tensor g, Gradients& grads, std::size_t& param_idx) {
  for (std::size_t ii = seq.size(); ii-- > 0;) {
    const LayerSpec& layer = seq[ii];
    if (!layer.has_params()) continue;
    ++param_idx;
  }
  std::size_t idx = param_idx;
  for (std::size_t ii = seq.size(); ii-- > 0;) {
    const LayerSpec& layer = seq[ii];
    const LayerTrace& t = trace.layers[ii];
    switch (layer.kind) {
      case LayerKind::softmax:
        break;
      case LayerKind::relu: {
        for (std::size_t j = 0; j < g.size(); ++j) {
          if (t.input[j] <= 0.0) g[j] = 0.0;
          else if (!t.mask.empty()) g[j] *= t.mask[j];
        }
        break;
      }
      case LayerKind::maxpool: {
        Tensor gin(t.input.shape());
        for (std::size_t o = 0; o < g.size(); ++o) gin[t.argmax[o]] += g[o];
        g = std::move(gin);
        break;
      }
      case LayerKind::dense: {
        --idx;
        Tensor& dw = grads.weights[idx];
        Tensor& db = grads.biases[idx];
        const double* x = t.input.storage().data();
        Tensor gin(t.input.shape());
        for (std::size_t o = 0; o < layer.out; ++o) {
          const double go = g[o];
          db[o] += go;
          double* dwrow = dw.storage().data() + o * layer.in;
          const double* wrow = layer.weights.storage().data() + o * layer.in;
          for (std::size_t i = 0; i < layer.in; ++i) {
            dwrow[i] += go * x[i];
            gin[i] += go * wrow[i];
          }
        }
        g = std::move(gin);
        break;
      }
      case LayerKind::conv2d: {
        --idx;
        Tensor& dw = grads.weights[idx];
        Tensor& db = grads.biases[idx];
        const std::size_t positions = t.cols.dim(0), patch = t.cols.dim(1);
        Tensor dcols({positions, patch});
        for (std::size_t co = 0; co < layer.c_out; ++co) {
          const double* wrow = layer.weights.storage().data() + co * patch;
          double* dwrow = dw.storage().data() + co * patch;
          for (std::size_t p = 0; p < positions; ++p) {
            const double go = g[co * positions + p];
            if (go == 0.0) continue;
            db[co] += go;
            const double* prow = t.cols.storage().data() + p * patch;
            double* drow = dcols.storage().data() + p * patch;
            for (std::size_t j = 0; j < patch; ++j) {
              dwrow[j] += go * prow[j];
              drow[j] += go * wrow[j];
            }
          }
        }
        g = col2im(dcols, t.input.shape(), layer.kernel);
        break;
      }
    }
  }
  return g;
}

Tensor forward_logits(const NetworkSpec& net, const Example& ex, NetTrace& trace, const DropoutCtx& drop) {
  if (ex.inputs.size() != net.branches.size())
    throw InvalidInput("example has " + std::to_string(ex.inputs.size()) + " inputs, network has " +
                       std::to_string(net.branches.size()) + " branches");
  trace.branches.resize(net.branches.size());
  trace.branch_out_shapes.clear();
  std::vector<Tensor> outs;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    if (ex.inputs[b].shape() != net.input_shapes[b])
      throw InvalidInput("branch " + std::to_string(b) + " expects input " + shape_string(net.input_shapes[b]) +
                         ", got " + shape_string(ex.inputs[b].shape()));
    outs.push_back(forward_seq(net.branches[b], ex.inputs[b], trace.branches[b], drop));
    trace.branch_out_shapes.push_back(outs.back().shape());
  }
  if (!net.fused()) return std::move(outs.front());
  return forward_seq(net.head, concat_flat(outs), trace.head, drop);
}

void backward(const NetworkSpec& net, const NetTrace& trace, Tensor dlogits, Gradients& grads) {
  std::size_t branch_params = 0;
  for (const auto& b : net.branches)
    branch_params += static_cast<std::size_t>(std::count_if(b.begin(), b.end(), [](const LayerSpec& l) { return l.has_params(); }));

  if (!net.fused()) {
    std::size_t idx = 0;
    backward_seq(net.branches[0], trace.branches[0], std::move(dlogits), grads, idx);
    return;
  }
  std::size_t head_idx = branch_params;
  Tensor gcat = backward_seq(net.head, trace.head, std::move(dlogits), grads, head_idx);

  std::size_t offset = 0, idx = 0;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    const Shape& shape = trace.branch_out_shapes[b];
    const std::size_t n = shape_size(shape);
    std::vector<double> part(gcat.storage().begin() + static_cast<std::ptrdiff_t>(offset),
                             gcat.storage().begin() + static_cast<std::ptrdiff_t>(offset + n));
    offset += n;
    backward_seq(net.branches[b], trace.branches[b], Tensor(shape, std::move(part)), grads, idx);
  }
}

Gradients zero_gradients(const NetworkSpec& net) {
  Gradients g;
  for_each_layer(net, [&](const LayerSpec& l) {
    if (!l.has_params()) return;
    g.weights.emplace_back(l.weights.shape());
    g.biases.emplace_back(l.bias.shape());
  });
  return g;
}

double ce_from_logits(const Tensor& logits, std::size_t label) {
  const auto v = logits.values();
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - m);
  return m + std::log(sum) - v[label];
}

void check_label(const NetworkSpec& net, std::size_t label) {
  if (label >= net.class_count())
    throw InvalidInput("label " + std::to_string(label) + " outside " + std::to_string(net.class_count()) + " classes");
}

}  // namespace

void init_params(NetworkSpec& net, std::uint64_t seed) {
  Rng rng(seed);
  for_each_layer(net, [&](LayerSpec& l) {
    if (!l.has_params()) return;
    const std::size_t fan_in = l.kind == LayerKind::dense ? l.in : l.c_in * l.kernel * l.kernel;
    const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& w : l.weights.values()) w = rng.normal(0.0, std);
    for (double& b : l.bias.values()) b = 0.0;
  });
}

Tensor softmax_ce_grad(const Tensor& logits, std::size_t label) {
  Tensor g = softmax_forward(logits);
  g[label] -= 1.0;
  return g;
}

double cross_entropy(const NetworkSpec& net, const Example& example) {
  check_label(net, example.label);
  NetTrace trace;
  return ce_from_logits(forward_logits(net, example, trace, {}), example.label);
}

Gradients loss_gradients(const NetworkSpec& net, const Example& example, double* loss) {
  check_label(net, example.label);
  NetTrace trace;
  const Tensor logits = forward_logits(net, example, trace, {});
  if (loss) *loss = ce_from_logits(logits, example.label);
  Gradients grads = zero_gradients(net);
  backward(net, trace, softmax_ce_grad(logits, example.label), grads);
  return grads;
}

TrainResult train_sgd(NetworkSpec net, std::span<const Example> data, const TrainConfig& cfg) {
  cfg.validate();
  net.validate();
  if (data.empty()) throw InvalidInput("training set is empty");
  for (const auto& ex : data) check_label(net, ex.label);

  Rng rng(cfg.seed);
  DropoutCtx drop{&rng, cfg.dropout_rate};
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainLog log;
  NetTrace trace;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Gradients grads = zero_gradients(net);
      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = data[order[k]];
        const Tensor logits = forward_logits(net, ex, trace, drop);
        const double loss = ce_from_logits(logits, ex.label);
        if (!std::isfinite(loss)) {
          std::ostringstream os;
          os << "non-finite training loss at epoch " << epoch << ", sample " << order[k]
             << " (learning_rate=" << cfg.learning_rate << ")";
          throw NumericFault(os.str());
        }
        loss_sum += loss;
        if (argmax(logits.values()) == ex.label) ++correct;
        backward(net, trace, softmax_ce_grad(logits, ex.label), grads);
      }
      const double step = cfg.learning_rate / static_cast<double>(end - start);
      std::size_t idx = 0;
      for_each_layer(net, [&](LayerSpec& l) {
        if (!l.has_params()) return;
        auto w = l.weights.values();
        auto gw = grads.weights[idx].values();
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= step * gw[j];
        auto b = l.bias.values();
        auto gb = grads.biases[idx].values();
        for (std::size_t j = 0; j < b.size(); ++j) b[j] -= step * gb[j];
        ++idx;
      });
    }
    log.epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
    log.epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(data.size()));
  }
  return {std::move(net), std::move(log)};
}

double grad_check(const NetworkSpec& net, const Example& example, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw InvalidInput("grad_check eps must lie in [1e-7, 1e-3]");
  const Gradients analytic = loss_gradients(net, example);
  NetworkSpec probe = net;
  double worst = 0.0;
  std::size_t idx = 0;
  auto check = [&](Tensor& param, const Tensor& grad) {
    for (std::size_t j = 0; j < param.size(); ++j) {
      const double saved = param[j];
      param[j] = saved + eps;
      const double up = cross_entropy(probe, example);
      param[j] = saved - eps;
      const double down = cross_entropy(probe, example);
      param[j] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = grad[j];
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
      worst = std::max(worst, rel);
    }
  };
  for_each_layer(probe, [&](LayerSpec& l) {
    if (!l.has_params()) return;
    check(l.weights, analytic.weights[idx]);
    check(l.bias, analytic.biases[idx]);
    ++idx;
  });
  return worst;
}

double accuracy(const NetworkSpec& net, std::span<const Example> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data)
    if (predict(net, ex.inputs) == ex.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace xbar::nn
