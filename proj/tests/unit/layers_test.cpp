// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mcm/errors.hpp"
#include "mcm/layers.hpp"
#include "mcm/ops.hpp"
#include "oracles.hpp"

using namespace mcm;

namespace {

std::vector<double> vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

oracle::LstmGate gate_of(const LstmParams& p, Gate g) {
  return {oracle::to_matrix(p.gate_input_weight(g)), oracle::to_matrix(p.gate_recurrent_weight(g)),
          vec(p.gate_bias(g))};
}

LstmParams random_lstm(std::size_t in, std::size_t hidden, Rng& rng) {
  auto p = LstmParams::zeros(in, hidden);
  p.input_weights = oracle::random_tensor(p.input_weights.shape(), rng);
  p.recurrent_weights = oracle::random_tensor(p.recurrent_weights.shape(), rng);
  p.bias = oracle::random_tensor(p.bias.shape(), rng);
  return p;
}

}  // namespace

TEST(Conv1d, HandExample) {
  Conv1dParams p{1, 2, 1, Tensor(Shape{1, 2, 1}, {1, 0}), Tensor(Shape{1}, {0})};
  Tape tape;
  auto y = conv1d(tape.constant(Tensor(Shape{2, 2}, {3, 7, -2, 5})), p).value();
  EXPECT_EQ(y.shape(), (Shape{2, 1}));
  EXPECT_EQ(vec(y), (std::vector<double>{3, 0}));
}

TEST(Conv1d, ZeroWeightsGiveZeroMap) {
  Rng rng(2);
  Conv1dParams p{2, 3, 4, Tensor(Shape{2, 3, 4}), Tensor(Shape{4})};
  Tape tape;
  for (double v : conv1d(tape.constant(oracle::random_tensor(Shape{5, 3}, rng)), p).value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv1d, WindowCounts) {
  Rng rng(4);
  Tape tape;
  auto x = tape.constant(oracle::random_tensor(Shape{6, 3}, rng));
  auto k1 = Conv1dParams::init(1, 3, 5, rng);
  auto k2 = Conv1dParams::init(2, 3, 5, rng);
  EXPECT_EQ(conv1d(x, k1).shape(), (Shape{6, 5}));
  EXPECT_EQ(conv1d(x, k2).shape(), (Shape{5, 5}));
  auto k7 = Conv1dParams::init(7, 3, 5, rng);
  EXPECT_THROW(conv1d(x, k7), ContractError);
}

TEST(Conv1d, MatchesWindowOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng.below(3), d = 1 + rng.below(4), f = 1 + rng.below(4), l = k + rng.below(5);
    auto p = Conv1dParams::init(k, d, f, rng);
    p.bias = oracle::random_tensor(Shape{f}, rng);
    Tensor x = oracle::random_tensor(Shape{l, d}, rng);
    Tape tape;
    auto got = conv1d(tape.constant(x), p).value();
    auto want = oracle::conv1d(oracle::to_matrix(x), p.weights, p.bias);
    ASSERT_EQ(got.shape(), (Shape{want.size(), f}));
    for (std::size_t j = 0; j < want.size(); ++j)
      for (std::size_t c = 0; c < f; ++c) EXPECT_NEAR(got.at(j, c), want[j][c], 1e-12);
  }
}

TEST(Conv1d, BatchedEqualsPerRow) {
  Rng rng(9);
  auto p = Conv1dParams::init(2, 3, 4, rng);
  Tensor x = oracle::random_tensor(Shape{3, 5, 3}, rng);
  Tape tape;
  auto batched = conv1d(tape.constant(x), p).value();
  for (std::size_t b = 0; b < 3; ++b) {
    auto row = conv1d(select(tape.constant(x), 0, b), p).value();
    for (std::size_t i = 0; i < row.numel(); ++i) EXPECT_EQ(batched[b * row.numel() + i], row[i]);
  }
}

TEST(Lstm, ZeroParameters) {
  auto p = LstmParams::zeros(3, 2);
  Tape tape;
  auto s = lstm_step(tape.constant(Tensor(Shape{3}, {1, 2, 3})), tape.constant(Tensor(Shape{2})),
                     tape.constant(Tensor(Shape{2})), p);
  EXPECT_EQ(vec(s.c.value()), (std::vector<double>{0, 0}));
  EXPECT_EQ(vec(s.h.value()), (std::vector<double>{0, 0}));
}

TEST(Lstm, MatchesScalarOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t in = 1 + rng.below(4), hidden = 1 + rng.below(4);
    auto p = random_lstm(in, hidden, rng);
    Tensor x = oracle::random_tensor(Shape{in}, rng);
    Tensor h = oracle::random_tensor(Shape{hidden}, rng), c = oracle::random_tensor(Shape{hidden}, rng);
    Tape tape;
    auto s = lstm_step(tape.constant(x), tape.constant(h), tape.constant(c), p);
    auto want = oracle::lstm_step(vec(x), vec(h), vec(c), gate_of(p, Gate::input), gate_of(p, Gate::forget),
                                  gate_of(p, Gate::output), gate_of(p, Gate::update));
    for (std::size_t j = 0; j < hidden; ++j) {
      EXPECT_NEAR(s.h.value()[j], want.h[j], 1e-12);
      EXPECT_NEAR(s.c.value()[j], want.c[j], 1e-12);
    }
  }
}

TEST(Lstm, SaturatedForgetGateCarriesMemory) {
  auto p = LstmParams::zeros(2, 2);
  p.set_gate(Gate::forget, Tensor(Shape{2, 2}), Tensor(Shape{2, 2}), Tensor(Shape{2}, 10.0));
  Tape tape;
  auto s = lstm_step(tape.constant(Tensor(Shape{2}, {0.3, -0.4})), tape.constant(Tensor(Shape{2})),
                     tape.constant(Tensor(Shape{2}, 1.0)), p);
  for (double v : s.c.value().data()) EXPECT_NEAR(v, 1.0, 1e-4);
}

TEST(Lstm, GateAccessorsRoundTrip) {
  Rng rng(1);
  auto p = LstmParams::init(3, 2, rng);
  auto w = oracle::random_tensor(Shape{2, 3}, rng), u = oracle::random_tensor(Shape{2, 2}, rng),
       b = oracle::random_tensor(Shape{2}, rng);
  p.set_gate(Gate::output, w, u, b);
  EXPECT_EQ(vec(p.gate_input_weight(Gate::output)), vec(w));
  EXPECT_EQ(vec(p.gate_recurrent_weight(Gate::output)), vec(u));
  EXPECT_EQ(vec(p.gate_bias(Gate::output)), vec(b));
  EXPECT_EQ(vec(p.gate_bias(Gate::forget)), (std::vector<double>{1, 1}));
}

TEST(Lstm, DimensionMismatchThrows) {
  auto p = LstmParams::zeros(3, 2);
  Tape tape;
  EXPECT_THROW(lstm_step(tape.constant(Tensor(Shape{4})), tape.constant(Tensor(Shape{2})),
                         tape.constant(Tensor(Shape{2})), p),
               ShapeError);
}

TEST(LstmSequence, SingleStepAndChaining) {
  Rng rng(6);
  auto p = random_lstm(3, 2, rng);
  Tensor x = oracle::random_tensor(Shape{4, 3}, rng);
  Tape tape;
  auto seq = lstm_sequence(tape.constant(x), p).value();
  ASSERT_EQ(seq.shape(), (Shape{4, 2}));
  std::vector<double> h(2, 0.0), c(2, 0.0);
  for (std::size_t t = 0; t < 4; ++t) {
    auto o = oracle::lstm_step({x.at(t, 0), x.at(t, 1), x.at(t, 2)}, h, c, gate_of(p, Gate::input),
                               gate_of(p, Gate::forget), gate_of(p, Gate::output), gate_of(p, Gate::update));
    h = o.h;
    c = o.c;
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(seq.at(t, j), h[j], 1e-12);
  }
  auto zero = LstmParams::zeros(3, 2);
  for (double v : lstm_sequence(tape.constant(x), zero).value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Dense, Examples) {
  Tape tape;
  DenseParams id{Tensor(Shape{2, 2}, {1, 0, 0, 1}), Tensor(Shape{2}), Activation::relu};
  EXPECT_EQ(vec(dense(tape.constant(Tensor(Shape{2}, {1, -1})), id).value()), (std::vector<double>{1, 0}));
  DenseParams bias_only{Tensor(Shape{3, 1}), Tensor(Shape{1}, {5}), Activation::none};
  EXPECT_EQ(vec(dense(tape.constant(Tensor(Shape{3}, {1, 2, 3})), bias_only).value()), (std::vector<double>{5}));
  EXPECT_THROW(dense(tape.constant(Tensor(Shape{2})), bias_only), ShapeError);
}

TEST(Dense, MatchesMatmulOracle) {
  Rng rng(12);
  auto p = DenseParams::init(4, 3, Activation::none, rng);
  p.bias = oracle::random_tensor(Shape{3}, rng);
  Tensor x = oracle::random_tensor(Shape{5, 4}, rng);
  Tape tape;
  auto got = dense(tape.constant(x), p).value();
  auto want = oracle::matmul(oracle::to_matrix(x), oracle::to_matrix(p.weights));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(got.at(i, j), want[i][j] + p.bias[j], 1e-12);
}

TEST(BatchNorm, TrainNormalisesColumns) {
  Rng rng(13);
  auto p = BatchNormParams::init(3);
  Tape tape;
  auto y = batchnorm(tape.constant(oracle::random_tensor(Shape{50, 3}, rng, -4, 9)), p, Mode::train).value();
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < 50; ++r) m += y.at(r, c) / 50;
    for (std::size_t r = 0; r < 50; ++r) v += (y.at(r, c) - m) * (y.at(r, c) - m) / 50;
    EXPECT_NEAR(m, 0.0, 1e-6);
    EXPECT_NEAR(v, 1.0, 1e-6);
  }
}

TEST(BatchNorm, ZeroGammaGivesBeta) {
  Rng rng(14);
  auto p = BatchNormParams::init(2);
  p.gamma = Tensor(Shape{2});
  p.beta = Tensor(Shape{2}, {0.5, -3});
  Tape tape;
  auto y = batchnorm(tape.constant(oracle::random_tensor(Shape{4, 2}, rng)), p, Mode::train).value();
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(y.at(r, 0), 0.5);
    EXPECT_EQ(y.at(r, 1), -3.0);
  }
}

TEST(BatchNorm, InferUsesRunningStatistics) {
  auto p = BatchNormParams::init(2);
  Tape tape;
  Tensor x(Shape{1, 2}, {2, -6});
  auto y = batchnorm(tape.constant(x), p, Mode::infer).value();
  EXPECT_NEAR(y[0], 2 / std::sqrt(1 + p.epsilon), 1e-15);
  EXPECT_NEAR(y[1], -6 / std::sqrt(1 + p.epsilon), 1e-15);
  EXPECT_EQ(vec(p.running_mean), (std::vector<double>{0, 0}));
}

TEST(BatchNorm, TrainUpdatesRunningStatistics) {
  auto p = BatchNormParams::init(1);
  Tape tape;
  batchnorm(tape.constant(Tensor(Shape{2, 1}, {1, 3})), p, Mode::train);
  EXPECT_NEAR(p.running_mean[0], 0.1 * 2, 1e-15);
  EXPECT_GT(p.running_var[0], 0.9);
}

TEST(BatchNorm, TrainNeedsTwoRows) {
  auto p = BatchNormParams::init(2);
  Tape tape;
  EXPECT_THROW(batchnorm(tape.constant(Tensor(Shape{1, 2})), p, Mode::train), ContractError);
}

TEST(Dropout, IdentityCases) {
  Rng rng(1);
  Tape tape;
  auto x = tape.constant(Tensor(Shape{4}, {1, 2, 3, 4}));
  EXPECT_EQ(dropout(x, 0.0, Mode::train, rng).id(), x.id());
  EXPECT_EQ(dropout(x, 0.5, Mode::infer, rng).id(), x.id());
  EXPECT_THROW(dropout(x, 1.0, Mode::train, rng), ContractError);
}

TEST(Dropout, SurvivorFractionAndMean) {
  Rng rng(77);
  Tape tape;
  const std::size_t n = 100000;
  auto y = dropout(tape.constant(Tensor(Shape{n}, 1.0)), 0.2, Mode::train, rng).value();
  std::size_t kept = 0;
  double sum = 0;
  for (double v : y.data()) {
    kept += v != 0.0;
    sum += v;
  }
  EXPECT_NEAR(static_cast<double>(kept) / n, 0.8, 0.01);
  EXPECT_NEAR(sum / n, 1.0, 0.02);
}

TEST(Attention, IdenticalRowsAreUntouched) {
  Rng rng(3);
  auto p = AttentionParams::init(3, rng);
  Tensor h(Shape{4, 3}, {1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3});
  Tape tape;
  auto r = soft_attention(tape.constant(h), p);
  for (double a : r.weights.value().data()) EXPECT_NEAR(a, 0.25, 1e-15);
  for (std::size_t i = 0; i < h.numel(); ++i) EXPECT_NEAR(r.output.value()[i], h[i], 1e-14);
}

TEST(Attention, SingleRow) {
  Rng rng(3);
  auto p = AttentionParams::init(2, rng);
  Tape tape;
  auto r = soft_attention(tape.constant(Tensor(Shape{1, 2}, {0.3, -0.7})), p);
  EXPECT_EQ(r.weights.value()[0], 1.0);
  EXPECT_EQ(vec(r.output.value()), (std::vector<double>{0.3, -0.7}));
}

TEST(Attention, HigherScoringRowDominates) {
  AttentionParams p{Tensor(Shape{2}, {1, 0}), Tensor(Shape{1})};
  // Equal norms, different scores.
  Tensor h(Shape{3, 2}, {1, 0, 0, 1, 0, -1});
  Tape tape;
  auto out = soft_attention(tape.constant(h), p).output.value();
  auto norm = [&](std::size_t r) { return std::hypot(out.at(r, 0), out.at(r, 1)); };
  EXPECT_GT(norm(0), norm(1));
  EXPECT_GT(norm(0), norm(2));
}

TEST(Attention, BatchedRowsSumToOne) {
  Rng rng(5);
  auto p = AttentionParams::init(3, rng);
  Tape tape;
  auto w = soft_attention(tape.constant(oracle::random_tensor(Shape{2, 5, 3}, rng)), p).weights.value();
  ASSERT_EQ(w.shape(), (Shape{2, 5}));
  for (std::size_t b = 0; b < 2; ++b) {
    double s = 0;
    for (std::size_t j = 0; j < 5; ++j) s += w.at(b, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(SoftmaxCe, UniformLogits) {
  for (std::size_t c : {2u, 4u, 12u}) {
    Tape tape;
    const std::vector<std::size_t> y{c - 1};
    auto r = softmax_ce(tape.constant(Tensor(Shape{c})), y);
    EXPECT_NEAR(r.loss.value()[0], std::log(static_cast<double>(c)), 1e-12);
    for (double p : r.probs.data()) EXPECT_NEAR(p, 1.0 / c, 1e-15);
  }
}

TEST(SoftmaxCe, ConfidentCorrect) {
  Tape tape;
  const std::vector<std::size_t> y{0};
  auto r = softmax_ce(tape.constant(Tensor(Shape{2}, {10, -10})), y);
  EXPECT_NEAR(r.loss.value()[0], std::log1p(std::exp(-20.0)), 1e-23);
  EXPECT_NEAR(r.loss.value()[0], 2.06e-9, 0.01e-9);
}

TEST(SoftmaxCe, MatchesLogSumExpOracleAndShiftInvariance) {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor z = oracle::random_tensor(Shape{3, 5}, rng, -20, 20);
    std::vector<std::size_t> y{rng.below(5), rng.below(5), rng.below(5)};
    Tensor shifted = z;
    for (auto& v : shifted.data()) v -= 40;
    Tape tape;
    const double loss = softmax_ce(tape.constant(z), y).loss.value()[0];
    const double loss_shift = softmax_ce(tape.constant(shifted), y).loss.value()[0];
    double want = 0;
    for (std::size_t r = 0; r < 3; ++r)
      want += oracle::cross_entropy({z.at(r, 0), z.at(r, 1), z.at(r, 2), z.at(r, 3), z.at(r, 4)}, y[r]) / 3;
    EXPECT_NEAR(loss, want, 1e-12);
    EXPECT_NEAR(loss, loss_shift, 1e-12);
  }
}

TEST(SoftmaxCe, TargetOutOfRange) {
  Tape tape;
  const std::vector<std::size_t> y{3};
  EXPECT_THROW(softmax_ce(tape.constant(Tensor(Shape{3})), y), ContractError);
}

TEST(Init, GlorotBoundAndFanIn) {
  Rng rng(2);
  auto w = glorot_uniform(Shape{10, 20}, 10, 20, rng);
  const double limit = std::sqrt(6.0 / 30);
  for (double v : w.data()) EXPECT_LE(std::abs(v), limit);
  auto p = LstmParams::init(3, 4, rng);
  EXPECT_EQ(p.input_weights.shape(), (Shape{3, 16}));
  EXPECT_EQ(p.recurrent_weights.shape(), (Shape{4, 16}));
}
