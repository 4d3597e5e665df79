// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "mcm/errors.hpp"
#include "mcm/ops.hpp"
#include "oracles.hpp"

using namespace mcm;

namespace {

std::vector<double> values(Var v) {
  auto d = v.value().data();
  return {d.begin(), d.end()};
}

Tensor t2(std::size_t r, std::size_t c, std::vector<double> v) { return Tensor(Shape{r, c}, std::move(v)); }

}  // namespace

TEST(Shape, RejectsZeroDimensions) { EXPECT_THROW(Shape({2, 0}), ShapeError); }

TEST(Shape, Algebra) {
  Shape s{2, 3, 4};
  EXPECT_EQ(s.numel(), 24u);
  EXPECT_EQ(s.without(1), (Shape{2, 4}));
  EXPECT_EQ(s.with_inserted(0, 5), (Shape{5, 2, 3, 4}));
  EXPECT_EQ(s.with(2, 7), (Shape{2, 3, 7}));
  EXPECT_EQ(Shape{3}.without(0), Shape{1});
}

TEST(Tensor, DataLengthMustMatchShape) {
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Tensor, GradBufferMatchesData) {
  Tensor t(Shape{2, 3}, 1.0);
  t.set_grad_enabled(true);
  EXPECT_EQ(t.grad_buffer().size(), t.numel());
  t.grad_buffer()[0] = 4;
  t.zero_grad();
  EXPECT_EQ(t.grad()[0], 0.0);
  t.set_grad_enabled(false);
  EXPECT_FALSE(t.has_grad());
}

TEST(Elementwise, Examples) {
  Tape tape;
  EXPECT_EQ(values(relu(tape.constant(Tensor(Shape{3}, {-1, 0, 2})))), (std::vector<double>{0, 0, 2}));
  EXPECT_EQ(values(sigmoid(tape.constant(Tensor(Shape{1}, {0})))), (std::vector<double>{0.5}));
  EXPECT_EQ(values(mul(tape.constant(Tensor(Shape{3}, {1, 2, 3})), tape.constant(Tensor(Shape{3}, {4, 5, 6})))),
            (std::vector<double>{4, 10, 18}));
}

TEST(Elementwise, SigmoidIsStableForLargeInputs) {
  Tape tape;
  auto v = values(sigmoid(tape.constant(Tensor(Shape{2}, {-800, 800}))));
  EXPECT_EQ(v[0], 0.0);
  EXPECT_EQ(v[1], 1.0);
}

TEST(Elementwise, ShapeMismatchThrows) {
  Tape tape;
  EXPECT_THROW(add(tape.constant(Tensor(Shape{2})), tape.constant(Tensor(Shape{3}))), ShapeError);
  EXPECT_THROW(add(tape.constant(Tensor(Shape{2, 1})), tape.constant(Tensor(Shape{2}))), ShapeError);
}

TEST(Matmul, Examples) {
  Tape tape;
  auto id = tape.constant(t2(2, 2, {1, 0, 0, 1}));
  EXPECT_EQ(values(matmul(id, tape.constant(t2(2, 2, {1, 2, 3, 4})))), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(values(matmul(tape.constant(t2(1, 2, {1, 2})), tape.constant(t2(2, 1, {3, 4})))),
            (std::vector<double>{11}));
  EXPECT_THROW(matmul(tape.constant(t2(2, 3, std::vector<double>(6))), tape.constant(t2(2, 3, std::vector<double>(6)))),
               ShapeError);
}

TEST(Matmul, MatchesNaiveOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.below(6), k = 1 + rng.below(6), n = 1 + rng.below(6);
    Tensor a = oracle::random_tensor(Shape{m, k}, rng), b = oracle::random_tensor(Shape{k, n}, rng);
    Tape tape;
    auto got = matmul(tape.constant(a), tape.constant(b)).value();
    auto want = oracle::matmul(oracle::to_matrix(a), oracle::to_matrix(b));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(got.at(i, j), want[i][j], 1e-12);
  }
}

TEST(Reduce, Examples) {
  Tape tape;
  auto x = tape.constant(t2(2, 2, {1, 5, 3, 2}));
  EXPECT_EQ(values(reduce(Reduce::max, x, 0)), (std::vector<double>{3, 5}));
  EXPECT_EQ(values(reduce(Reduce::mean, x, 0)), (std::vector<double>{2, 3.5}));
  EXPECT_EQ(values(reduce(Reduce::sum, x, 1)), (std::vector<double>{6, 5}));
  EXPECT_THROW(reduce(Reduce::sum, x, 2), ShapeError);
}

TEST(Reduce, MaxGradientGoesToFirstOccurrence) {
  Tensor x(Shape{2, 3}, {4, 4, 1, 2, 7, 7});
  x.set_grad_enabled(true);
  Tape tape;
  tape.backward(sum_all(reduce(Reduce::max, tape.leaf(x), 1)));
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1, 0, 0, 0, 1, 0}));
}

TEST(Reduce, MaxPoolGradientHasOneNonzeroPerSlice) {
  Rng rng(5);
  Tensor x = oracle::random_tensor(Shape{3, 5, 4}, rng);
  x.set_grad_enabled(true);
  Tape tape;
  tape.backward(sum_all(reduce(Reduce::max, tape.leaf(x), 1)));
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t f = 0; f < 4; ++f) {
      int nonzero = 0;
      for (std::size_t t = 0; t < 5; ++t) nonzero += x.grad()[(b * 5 + t) * 4 + f] != 0.0;
      EXPECT_EQ(nonzero, 1);
    }
}

TEST(Concat, Examples) {
  Tape tape;
  auto a = tape.constant(t2(1, 2, {1, 2}));
  auto b = tape.constant(t2(1, 2, {3, 4}));
  auto c = concat({a, b}, 1);
  EXPECT_EQ(c.shape(), (Shape{1, 4}));
  EXPECT_EQ(values(c), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(values(concat({a}, 0)), values(a));
  EXPECT_THROW(concat({a, tape.constant(t2(2, 2, {1, 2, 3, 4}))}, 1), ShapeError);
}

TEST(Concat, MaxAndMeanPoolGiveTwoF) {
  Rng rng(1);
  Tape tape;
  auto x = tape.constant(oracle::random_tensor(Shape{2, 6, 5}, rng));
  auto pooled = concat({reduce(Reduce::max, x, 1), reduce(Reduce::mean, x, 1)}, 1);
  EXPECT_EQ(pooled.shape(), (Shape{2, 10}));
}

TEST(Backward, Examples) {
  Tensor x(Shape{2, 3}, 0.5);
  x.set_grad_enabled(true);
  {
    Tape tape;
    tape.backward(sum_all(tape.leaf(x)));
  }
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);

  Tensor y(Shape{2}, {1, 2});
  y.set_grad_enabled(true);
  Tape tape;
  Var v = tape.leaf(y);
  tape.backward(sum_all(mul(v, v)));
  EXPECT_EQ(y.grad()[0], 2.0);
  EXPECT_EQ(y.grad()[1], 4.0);
}

TEST(Backward, AccumulatesAcrossFanOut) {
  Tensor x(Shape{1}, {3});
  x.set_grad_enabled(true);
  Tape tape;
  Var v = tape.leaf(x);
  tape.backward(sum_all(add(add(v, v), scale(v, 2.0))));
  EXPECT_EQ(x.grad()[0], 4.0);
}

TEST(Backward, Contracts) {
  Tape empty;
  Tape other;
  EXPECT_THROW(empty.backward(other.constant(Tensor::scalar(1))), ContractError);
  Tape tape;
  Var v = tape.constant(Tensor(Shape{2}, 1.0));
  EXPECT_THROW(tape.backward(v), ContractError);
  Var s = sum_all(v);
  tape.backward(s);
  EXPECT_THROW(tape.backward(s), ContractError);
}

TEST(Backward, NonRecordingTapeKeepsNoRules) {
  Tensor x(Shape{2}, 1.0);
  x.set_grad_enabled(true);
  Tape tape(false);
  Var s = sum_all(tape.leaf(x));
  EXPECT_FALSE(s.requires_grad());
  tape.backward(s);
  EXPECT_FALSE(x.has_grad());
}

TEST(StopGradient, BlocksFlow) {
  Tensor x(Shape{2}, {1, 2});
  x.set_grad_enabled(true);
  Tape tape;
  Var v = tape.leaf(x);
  tape.backward(sum_all(add(v, stop_gradient(scale(v, 5.0)))));
  EXPECT_EQ(x.grad()[0], 1.0);
  EXPECT_EQ(x.grad()[1], 1.0);
}

TEST(GatherRows, FrozenRowAndRange) {
  Tensor table(Shape{4, 2}, {0, 0, 1, 1, 2, 2, 3, 3});
  table.set_grad_enabled(true);
  Tape tape;
  const std::vector<std::size_t> ids{0, 3, 3};
  tape.backward(sum_all(gather_rows(tape.leaf(table), ids, 0)));
  EXPECT_EQ(std::vector<double>(table.grad().begin(), table.grad().end()),
            (std::vector<double>{0, 0, 0, 0, 0, 0, 2, 2}));
  const std::vector<std::size_t> bad{4};
  Tape t2;
  EXPECT_THROW(gather_rows(t2.leaf(table), bad), ContractError);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  Rng rng(8);
  Tensor z = oracle::random_tensor(Shape{3, 6}, rng, -5, 5);
  Tensor shifted = z;
  for (auto& v : shifted.data()) v += 123.0;
  Tape tape;
  auto p = softmax(tape.constant(z)).value();
  auto q = softmax(tape.constant(shifted)).value();
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 6; ++c) {
      s += p.at(r, c);
      EXPECT_NEAR(p.at(r, c), q.at(r, c), 1e-12);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Determinism, SameInputsSameBits) {
  auto run = [] {
    Rng rng(11);
    Tensor a = oracle::random_tensor(Shape{4, 3}, rng), b = oracle::random_tensor(Shape{3, 5}, rng);
    a.set_grad_enabled(true);
    Tape tape;
    tape.backward(sum_all(tanh(matmul(tape.leaf(a), tape.constant(b)))));
    return std::vector<double>(a.grad().begin(), a.grad().end());
  };
  EXPECT_EQ(run(), run());
}

class GradCheck : public ::testing::TestWithParam<std::size_t> {};

TEST_P(GradCheck, CentralDifferences) {
  const auto cases = oracle::grad_cases();
  const auto& c = cases.at(GetParam());
  Rng rng(1000 + GetParam());
  for (int i = 0; i < 20; ++i) {
    const auto r = c.run(rng);
    EXPECT_LT(r.max_rel_error, 1e-4) << c.name << " instance " << i;
    EXPECT_GT(r.checked, 0u) << c.name;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, GradCheck, ::testing::Range<std::size_t>(0, oracle::grad_cases().size()),
                         [](const auto& info) { return oracle::grad_cases()[info.param].name; });

TEST(NaN, PropagatesThroughReluAndMax) {
  const double nan = std::nan("");
  Tape tape;
  auto r = relu(tape.constant(Tensor(Shape{3}, {nan, -1, 2}))).value();
  EXPECT_TRUE(std::isnan(r[0]));
  auto m = reduce(Reduce::max, tape.constant(Tensor(Shape{3}, {1, nan, 5})), 0).value();
  EXPECT_TRUE(std::isnan(m[0]));
}
