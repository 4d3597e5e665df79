// SPDX-License-Identifier: Apache-2.0
#include "mcm/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcm/errors.hpp"

namespace mcm {
namespace {

Var add_bias(Var x, Var bias) {
  return add(x, broadcast(bias, 0, x.shape()[0]));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

Conv1dParams Conv1dParams::init(std::size_t kernel, std::size_t in_dim, std::size_t filters, Rng& rng) {
  if (kernel == 0) throw ConfigError("conv1d kernel size must be >= 1");
  Conv1dParams p;
  p.kernel = kernel;
  p.in_dim = in_dim;
  p.filters = filters;
  p.weights = glorot_uniform(Shape{kernel, in_dim, filters}, kernel * in_dim, filters, rng);
  p.bias = Tensor(Shape{filters});
  return p;
}

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.input_weights = Tensor(Shape{input_dim, 4 * hidden_dim});
  p.recurrent_weights = Tensor(Shape{hidden_dim, 4 * hidden_dim});
  p.bias = Tensor(Shape{4 * hidden_dim});
  return p;
}

LstmParams LstmParams::init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  LstmParams p = zeros(input_dim, hidden_dim);
  const std::size_t h = hidden_dim;
  // Per-gate Glorot limits, laid into the fused blocks.
  const double wl = std::sqrt(6.0 / static_cast<double>(input_dim + h));
  const double ul = std::sqrt(6.0 / static_cast<double>(2 * h));
  for (auto& v : p.input_weights.data()) v = rng.uniform(-wl, wl);
  for (auto& v : p.recurrent_weights.data()) v = rng.uniform(-ul, ul);
  for (std::size_t j = 0; j < h; ++j) p.bias[h + j] = 1.0;
  return p;
}

Tensor LstmParams::gate_input_weight(Gate g) const {
  const std::size_t h = hidden_dim, off = static_cast<std::size_t>(g) * h;
  Tensor w(Shape{h, input_dim});
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < input_dim; ++c) w.at(r, c) = input_weights.at(c, off + r);
  return w;
}

Tensor LstmParams::gate_recurrent_weight(Gate g) const {
  const std::size_t h = hidden_dim, off = static_cast<std::size_t>(g) * h;
  Tensor u(Shape{h, h});
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < h; ++c) u.at(r, c) = recurrent_weights.at(c, off + r);
  return u;
}

Tensor LstmParams::gate_bias(Gate g) const {
  const std::size_t h = hidden_dim, off = static_cast<std::size_t>(g) * h;
  Tensor b(Shape{h});
  for (std::size_t r = 0; r < h; ++r) b[r] = bias[off + r];
  return b;
}

void LstmParams::set_gate(Gate g, const Tensor& w, const Tensor& u, const Tensor& b) {
  const std::size_t h = hidden_dim, off = static_cast<std::size_t>(g) * h;
  require(w.shape() == Shape({h, input_dim}) && u.shape() == Shape({h, h}) && b.numel() == h,
          "LstmParams::set_gate: inconsistent gate shapes");
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < input_dim; ++c) input_weights.at(c, off + r) = w.at(r, c);
    for (std::size_t c = 0; c < h; ++c) recurrent_weights.at(c, off + r) = u.at(r, c);
    bias[off + r] = b[r];
  }
}

DenseParams DenseParams::init(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  DenseParams p;
  p.weights = glorot_uniform(Shape{in, out}, in, out, rng);
  p.bias = Tensor(Shape{out});
  p.activation = act;
  return p;
}

BatchNormParams BatchNormParams::init(std::size_t dim) {
  BatchNormParams p;
  p.gamma = Tensor(Shape{dim}, 1.0);
  p.beta = Tensor(Shape{dim}, 0.0);
  p.running_mean = Tensor(Shape{dim}, 0.0);
  p.running_var = Tensor(Shape{dim}, 1.0);
  return p;
}

AttentionParams AttentionParams::init(std::size_t dim, Rng& rng) {
  AttentionParams p;
  p.weights = glorot_uniform(Shape{dim}, dim, 1, rng);
  p.bias = Tensor(Shape{1});
  return p;
}

Var conv1d(Var x, Conv1dParams& p) {
  const bool single = x.shape().rank() == 2;
  if (single) x = reshape(x, x.shape().with_inserted(0, 1));
  require(x.shape().rank() == 3, "conv1d expects l x d or B x l x d input, got " + x.shape().str());
  const std::size_t batch = x.shape()[0], len = x.shape()[1], dim = x.shape()[2];
  require(dim == p.in_dim, "conv1d: input dim " + std::to_string(dim) + " != " + std::to_string(p.in_dim));
  require(p.weights.shape() == Shape({p.kernel, p.in_dim, p.filters}) && p.bias.numel() == p.filters,
          "conv1d: parameter shapes inconsistent with (k, d, F)");
  if (len < p.kernel) {
    throw ContractError("conv1d: input of length " + std::to_string(len) + " is shorter than kernel " +
                        std::to_string(p.kernel));
  }
  Tape& tape = x.tape();
  const std::size_t windows = len - p.kernel + 1;

  Var win = x;
  if (p.kernel > 1) {
    std::vector<Var> shifted;
    for (std::size_t j = 0; j < p.kernel; ++j) shifted.push_back(slice(x, 1, j, j + windows));
    win = concat(shifted, 2);
  }
  win = reshape(win, Shape{batch * windows, p.kernel * dim});
  Var w = reshape(tape.leaf(p.weights), Shape{p.kernel * dim, p.filters});
  Var y = relu(add_bias(matmul(win, w), tape.leaf(p.bias)));
  return single ? reshape(y, Shape{windows, p.filters}) : reshape(y, Shape{batch, windows, p.filters});
}

namespace {

struct BoundLstm {
  Var w, u, b;
  std::size_t hidden;
};

BoundLstm bind(Tape& tape, LstmParams& p) {
  require(p.input_weights.shape() == Shape({p.input_dim, 4 * p.hidden_dim}) &&
              p.recurrent_weights.shape() == Shape({p.hidden_dim, 4 * p.hidden_dim}) &&
              p.bias.numel() == 4 * p.hidden_dim,
          "LstmParams: matrices inconsistent with input/hidden dims");
  return {tape.leaf(p.input_weights), tape.leaf(p.recurrent_weights), tape.leaf(p.bias), p.hidden_dim};
}

// Gate arithmetic given pre-activations (B x 4H); c_prev may be absent (zero state).
LstmState lstm_gates(Var pre, const Var* c_prev, std::size_t h) {
  Var i = sigmoid(slice(pre, 1, 0, h));
  Var f = sigmoid(slice(pre, 1, h, 2 * h));
  Var o = sigmoid(slice(pre, 1, 2 * h, 3 * h));
  Var u = tanh(slice(pre, 1, 3 * h, 4 * h));
  Var c = c_prev ? add(mul(i, u), mul(f, *c_prev)) : mul(i, u);
  Var hs = mul(o, tanh(c));
  return {hs, c};
}

}  // namespace

LstmState lstm_step(Var x, Var h_prev, Var c_prev, LstmParams& p) {
  const bool single = x.shape().rank() == 1;
  if (single) {
    x = reshape(x, Shape{1, x.numel()});
    h_prev = reshape(h_prev, Shape{1, h_prev.numel()});
    c_prev = reshape(c_prev, Shape{1, c_prev.numel()});
  }
  require(x.shape().rank() == 2 && x.shape()[1] == p.input_dim,
          "lstm_step: input shape " + x.shape().str() + " does not match input_dim " + std::to_string(p.input_dim));
  const std::size_t batch = x.shape()[0];
  const Shape state{batch, p.hidden_dim};
  require(h_prev.shape() == state && c_prev.shape() == state, "lstm_step: state shape mismatch");
  BoundLstm b = bind(x.tape(), p);
  Var pre = add_bias(add(matmul(x, b.w), matmul(h_prev, b.u)), b.b);
  LstmState s = lstm_gates(pre, &c_prev, p.hidden_dim);
  if (single) {
    s.h = reshape(s.h, Shape{p.hidden_dim});
    s.c = reshape(s.c, Shape{p.hidden_dim});
  }
  return s;
}

Var lstm_sequence(Var x, LstmParams& p) {
  const bool single = x.shape().rank() == 2;
  if (single) x = reshape(x, x.shape().with_inserted(0, 1));
  require(x.shape().rank() == 3, "lstm_sequence expects l x in or B x l x in, got " + x.shape().str());
  const std::size_t batch = x.shape()[0], len = x.shape()[1], in = x.shape()[2];
  require(in == p.input_dim, "lstm_sequence: input dim " + std::to_string(in) + " != " + std::to_string(p.input_dim));
  const std::size_t h = p.hidden_dim;
  BoundLstm b = bind(x.tape(), p);

  // Input projections for every step in one product.
  Var xw = add_bias(matmul(reshape(x, Shape{batch * len, in}), b.w), b.b);
  xw = reshape(xw, Shape{batch, len, 4 * h});

  std::vector<Var> outputs;
  outputs.reserve(len);
  LstmState s;
  for (std::size_t t = 0; t < len; ++t) {
    Var pre = select(xw, 1, t);
    if (t == 0) {
      s = lstm_gates(pre, nullptr, h);
    } else {
      pre = add(pre, matmul(s.h, b.u));
      s = lstm_gates(pre, &s.c, h);
    }
    outputs.push_back(s.h);
  }
  Var hs = stack(outputs, 1);
  return single ? reshape(hs, Shape{len, h}) : hs;
}

Var dense(Var x, DenseParams& p) {
  const bool single = x.shape().rank() == 1;
  if (single) x = reshape(x, Shape{1, x.numel()});
  require(p.bias.numel() == p.out_dim(), "dense: bias length does not match output dim");
  require(x.shape().rank() == 2 && x.shape()[1] == p.in_dim(),
          "dense: input " + x.shape().str() + " does not match in_dim " + std::to_string(p.in_dim()));
  Tape& tape = x.tape();
  Var y = add_bias(matmul(x, tape.leaf(p.weights)), tape.leaf(p.bias));
  if (p.activation == Activation::relu) y = relu(y);
  return single ? reshape(y, Shape{p.out_dim()}) : y;
}

Var batchnorm(Var x, BatchNormParams& p, Mode mode) {
  require(x.shape().rank() == 2 && x.shape()[1] == p.dim(),
          "batchnorm: input " + x.shape().str() + " does not match dim " + std::to_string(p.dim()));
  const std::size_t n = x.shape()[0], dim = p.dim();
  if (mode == Mode::train && n < 2) throw ContractError("batchnorm: train mode needs a batch of at least 2");

  Tape& tape = x.tape();
  Var gamma = tape.leaf(p.gamma);
  Var beta = tape.leaf(p.beta);
  const Tensor& xv = x.value();

  std::vector<double> mean(dim), inv_std(dim);
  if (mode == Mode::train) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < dim; ++c) mean[c] += xv.at(r, c);
    for (auto& m : mean) m /= static_cast<double>(n);
    std::vector<double> var(dim);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = xv.at(r, c) - mean[c];
        var[c] += d * d;
      }
    for (std::size_t c = 0; c < dim; ++c) {
      const double biased = var[c] / static_cast<double>(n);
      inv_std[c] = 1.0 / std::sqrt(biased + p.epsilon);
      const double unbiased = var[c] / static_cast<double>(n - 1);
      p.running_mean[c] = p.momentum * p.running_mean[c] + (1.0 - p.momentum) * mean[c];
      p.running_var[c] = p.momentum * p.running_var[c] + (1.0 - p.momentum) * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < dim; ++c) {
      mean[c] = p.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(p.running_var[c] + p.epsilon);
    }
  }

  Tensor xhat(xv.shape());
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < dim; ++c) {
      xhat.at(r, c) = (xv.at(r, c) - mean[c]) * inv_std[c];
      out.at(r, c) = p.gamma[c] * xhat.at(r, c) + p.beta[c];
    }

  const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
  const bool train = mode == Mode::train;
  const Var operands[] = {x, gamma, beta};
  return tape.record(
      std::move(out), operands,
      [ix, ig, ib, n, dim, train, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, std::span<const double> g) {
        if (t.requires_grad(ib)) {
          auto gb = t.grad(ib);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < dim; ++c) gb[c] += g[r * dim + c];
        }
        if (t.requires_grad(ig)) {
          auto gg = t.grad(ig);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < dim; ++c) gg[c] += g[r * dim + c] * xhat.at(r, c);
        }
        if (!t.requires_grad(ix)) return;
        auto gx = t.grad(ix);
        auto gamma_v = t.value(ig).data();
        if (!train) {
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < dim; ++c) gx[r * dim + c] += g[r * dim + c] * gamma_v[c] * inv_std[c];
          return;
        }
        std::vector<double> sum_d(dim), sum_dx(dim);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < dim; ++c) {
            const double d = g[r * dim + c] * gamma_v[c];
            sum_d[c] += d;
            sum_dx[c] += d * xhat.at(r, c);
          }
        const double nn = static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < dim; ++c) {
            const double d = g[r * dim + c] * gamma_v[c];
            gx[r * dim + c] += inv_std[c] / nn * (nn * d - sum_d[c] - xhat.at(r, c) * sum_dx[c]);
          }
      });
}

Var dropout(Var x, double rate, Mode mode, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout rate must lie in [0, 1)");
  if (mode == Mode::infer || rate == 0.0) return x;
  Tensor mask(x.shape());
  const double keep = 1.0 / (1.0 - rate);
  for (auto& m : mask.data()) m = rng.bernoulli(rate) ? 0.0 : keep;
  return mul(x, x.tape().constant(std::move(mask)));
}

AttentionResult soft_attention(Var h, AttentionParams& p) {
  const bool single = h.shape().rank() == 2;
  if (single) h = reshape(h, h.shape().with_inserted(0, 1));
  require(h.shape().rank() == 3, "soft_attention expects l x dim or B x l x dim, got " + h.shape().str());
  const std::size_t batch = h.shape()[0], len = h.shape()[1], dim = h.shape()[2];
  require(dim == p.dim() && p.bias.numel() == 1, "soft_attention: parameter dim does not match feature map");
  Tape& tape = h.tape();
  Var flat = reshape(h, Shape{batch * len, dim});
  Var w = reshape(tape.leaf(p.weights), Shape{dim, 1});
  Var b = broadcast(tape.leaf(p.bias), 0, batch * len);
  Var scores = reshape(tanh(add(matmul(flat, w), b)), Shape{batch, len});
  Var alpha = softmax(scores);
  Var weight = broadcast(scale(alpha, static_cast<double>(len)), 2, dim);
  Var out = mul(h, weight);
  if (single) return {reshape(out, Shape{len, dim}), reshape(alpha, Shape{len})};
  return {out, alpha};
}

SoftmaxCe softmax_ce(Var logits, std::span<const std::size_t> targets) {
  const bool single = logits.shape().rank() == 1;
  if (single) logits = reshape(logits, Shape{1, logits.numel()});
  require(logits.shape().rank() == 2, "softmax_ce expects C or B x C logits");
  const std::size_t n = logits.shape()[0], classes = logits.shape()[1];
  if (targets.size() != n) throw ContractError("softmax_ce: one target per row required");
  for (auto t : targets) {
    if (t >= classes) {
      throw ContractError("softmax_ce: target " + std::to_string(t) + " out of range for " +
                          std::to_string(classes) + " classes");
    }
  }
  const Tensor& z = logits.value();
  Tensor probs(z.shape());
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* zr = z.data().data() + r * classes;
    double* pr = probs.data().data() + r * classes;
    const auto top = static_cast<std::size_t>(std::max_element(zr, zr + classes) - zr);
    const double mx = zr[top];
    // Sum of the non-maximal terms; log1p keeps confident losses precise.
    double rest = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      pr[c] = std::exp(zr[c] - mx);
      if (c != top) rest += pr[c];
    }
    for (std::size_t c = 0; c < classes; ++c) pr[c] /= 1.0 + rest;
    total += std::log1p(rest) - (zr[targets[r]] - mx);
  }
  const double nn = static_cast<double>(n);
  const std::size_t il = logits.id();
  const Var operands[] = {logits};
  Var loss = logits.tape().record(
      Tensor::scalar(total / nn), operands,
      [il, n, classes, nn, probs, tg = std::vector<std::size_t>(targets.begin(), targets.end())](
          Tape& t, std::span<const double> g) {
        auto gl = t.grad(il);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < classes; ++c) {
            const double y = c == tg[r] ? 1.0 : 0.0;
            gl[r * classes + c] += g[0] * (probs[r * classes + c] - y) / nn;
          }
      });
  if (single) probs = probs.reshaped(Shape{classes});
  return {std::move(probs), loss};
}

}  // namespace mcm
