// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "mcm/errors.hpp"
#include "mcm/optimizer.hpp"

using namespace mcm;

namespace {

// One-tensor wrappers for the span-of-spans interface.
void adam(std::vector<double>& p, const std::vector<double>& g, AdamState& s, double lr) {
  const std::span<double> ps[] = {p};
  const std::span<const double> gs[] = {g};
  adam_step(ps, gs, s, lr);
}

}  // namespace

TEST(Adam, ZeroGradientIsAFixedPoint) {
  std::vector<double> p{0.3, -2.0};
  const auto start = p;
  AdamState s;
  for (int i = 0; i < 50; ++i) adam(p, {0.0, 0.0}, s, 0.002);
  EXPECT_EQ(p, start);
  EXPECT_EQ(s.t, 50u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p{1.0};
  AdamState s;
  adam(p, {1.0}, s, 0.002);
  EXPECT_NEAR(p[0], 1.0 - 0.002 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ConvergesOnQuadratic) {
  std::vector<double> p{1.0};
  AdamState s;
  for (int i = 0; i < 500; ++i) adam(p, {2 * p[0]}, s, 0.01);
  EXPECT_LT(std::abs(p[0]), 0.01);
}

TEST(Adam, SizeMismatchThrows) {
  std::vector<double> p{1.0, 2.0};
  AdamState s;
  EXPECT_THROW(adam(p, {1.0}, s, 0.1), ContractError);
}

TEST(Adadelta, DescendsQuadratic) {
  std::vector<double> p{1.0};
  AdadeltaState s;
  const std::span<double> ps[] = {p};
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> g{2 * p[0]};
    const std::span<const double> gs[] = {g};
    adadelta_step(ps, gs, s, 1.0);
  }
  EXPECT_LT(p[0], 1.0);
  EXPECT_GT(p[0], 0.0);
}

TEST(Sgd, PlainStep) {
  std::vector<double> p{1.0, 1.0};
  const std::vector<double> g{0.5, -1.0};
  const std::span<double> ps[] = {p};
  const std::span<const double> gs[] = {g};
  sgd_step(ps, gs, 0.1);
  EXPECT_EQ(p, (std::vector<double>{0.95, 1.1}));
}

TEST(Optimizer, StepsTensorsWithAndWithoutGrads) {
  Tensor a(Shape{2}, 1.0), b(Shape{1}, 1.0);
  a.set_grad_enabled(true);
  a.grad_buffer()[0] = 1.0;
  Optimizer opt(OptimizerKind::sgd, 0.5);
  Tensor* params[] = {&a, &b};
  opt.step(params);
  EXPECT_EQ(a[0], 0.5);
  EXPECT_EQ(a[1], 1.0);
  EXPECT_EQ(b[0], 1.0);
  EXPECT_EQ(opt.steps(), 1u);
  EXPECT_THROW(Optimizer(OptimizerKind::adam, 0.0), ConfigError);
}

TEST(Optimizer, Names) {
  for (auto k : {OptimizerKind::adam, OptimizerKind::adadelta, OptimizerKind::sgd})
    EXPECT_EQ(parse_optimizer(to_string(k)), k);
  EXPECT_THROW(parse_optimizer("rmsprop"), ConfigError);
}
