// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mcm/ops.hpp"
#include "mcm/rng.hpp"
#include "mcm/tensor.hpp"

namespace mcm {

enum class Mode { train, infer };

/// Glorot-uniform weights of the given shape; limit sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Valid 1-d convolution over word windows. `weights` is k x d x F: a window
/// of k concatenated word vectors is one (k*d)-vector, matched against F filters.
struct Conv1dParams {
  std::size_t kernel = 1;
  std::size_t in_dim = 1;
  std::size_t filters = 1;
  Tensor weights;  // k x d x F
  Tensor bias;     // F

  static Conv1dParams init(std::size_t kernel, std::size_t in_dim, std::size_t filters, Rng& rng);
};

enum class Gate { input = 0, forget = 1, output = 2, update = 3 };

/// LSTM parameters, gates fused column-wise in the order i, f, o, u so one
/// product per step yields all pre-activations:
///   input_weights     in x 4H   (W_g transposed, per gate block)
///   recurrent_weights H x 4H    (U_g transposed)
///   bias              4H
struct LstmParams {
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 1;
  Tensor input_weights;
  Tensor recurrent_weights;
  Tensor bias;

  /// Forget-gate bias starts at +1.
  static LstmParams init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
  static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim);

  /// W_g as hidden x input.
  Tensor gate_input_weight(Gate g) const;
  /// U_g as hidden x hidden.
  Tensor gate_recurrent_weight(Gate g) const;
  Tensor gate_bias(Gate g) const;
  void set_gate(Gate g, const Tensor& w, const Tensor& u, const Tensor& b);
};

enum class Activation { relu, none };

/// Fully connected layer. `weights` is stored in x out so a batch multiplies
/// on the left: y = act(x W + b).
struct DenseParams {
  Tensor weights;  // in x out
  Tensor bias;     // out
  Activation activation = Activation::none;

  std::size_t in_dim() const { return weights.shape()[0]; }
  std::size_t out_dim() const { return weights.shape()[1]; }

  static DenseParams init(std::size_t in, std::size_t out, Activation act, Rng& rng);
};

struct BatchNormParams {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
  /// running <- momentum * running + (1 - momentum) * batch statistic.
  double momentum = 0.9;
  double epsilon = 1e-5;

  std::size_t dim() const { return gamma.numel(); }
  static BatchNormParams init(std::size_t dim);
};

/// Additive scorer: score_j = tanh(w . H_j + b).
struct AttentionParams {
  Tensor weights;  // dim
  Tensor bias;     // 1

  std::size_t dim() const { return weights.numel(); }
  static AttentionParams init(std::size_t dim, Rng& rng);
};

/// x is l x d or B x l x d; returns (l-k+1) x F or B x (l-k+1) x F after ReLU.
Var conv1d(Var x, Conv1dParams& p);

struct LstmState {
  Var h;
  Var c;
};

/// One step of the recurrence. x is `input_dim` or B x input_dim; h and c match.
LstmState lstm_step(Var x, Var h_prev, Var c_prev, LstmParams& p);

/// Folds lstm_step over time from zero state. X is l x in or B x l x in;
/// returns all hidden states, l x H or B x l x H.
Var lstm_sequence(Var x, LstmParams& p);

/// x is `in` or B x in.
Var dense(Var x, DenseParams& p);

/// x is B x dim. Train mode normalizes with batch statistics (B >= 2) and
/// updates the running statistics; infer mode uses the running statistics.
Var batchnorm(Var x, BatchNormParams& p, Mode mode);

/// Inverted dropout. Infer mode or rate 0 returns `x` itself.
Var dropout(Var x, double rate, Mode mode, Rng& rng);

struct AttentionResult {
  Var output;   // same shape as H
  Var weights;  // l or B x l; each row sums to 1
};

/// Reweights the rows of H (l x dim or B x l x dim) by softmax-normalised
/// scores, rescaled by l so that uniform weights leave H unchanged.
AttentionResult soft_attention(Var h, AttentionParams& p);

struct SoftmaxCe {
  Tensor probs;  // same shape as logits
  Var loss;      // mean cross-entropy over the batch, shape {1}
};

/// logits is C or B x C; one target per row.
SoftmaxCe softmax_ce(Var logits, std::span<const std::size_t> targets);

}  // namespace mcm
