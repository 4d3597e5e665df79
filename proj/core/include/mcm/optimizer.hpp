// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mcm/tensor.hpp"

namespace mcm {

enum class OptimizerKind { adam, adadelta, sgd };

const char* to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update over parallel parameter/gradient lists.
/// Accumulators are created on the first call; t is incremented once.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, double lr);

struct AdadeltaState {
  double rho = 0.95;
  double epsilon = 1e-6;
  std::vector<std::vector<double>> sq_grad;
  std::vector<std::vector<double>> sq_update;
};

/// Adadelta with its unit-correcting step multiplied by lr.
void adadelta_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                   AdadeltaState& state, double lr);

void sgd_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
              double lr);

/// Applies one update to a fixed list of tensors using their accumulated
/// grads. A tensor without a grad buffer counts as a zero gradient.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);

  void step(std::span<Tensor* const> params);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  std::size_t steps() const { return steps_; }

 private:
  OptimizerKind kind_;
  double lr_;
  std::size_t steps_ = 0;
  AdamState adam_;
  AdadeltaState adadelta_;
};

}  // namespace mcm
