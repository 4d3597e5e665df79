// SPDX-License-Identifier: Apache-2.0
#include "mcm/optimizer.hpp"

#include <cmath>

#include "mcm/errors.hpp"

namespace mcm {

const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adadelta: return "adadelta";
    case OptimizerKind::sgd: return "sgd";
  }
  return "?";
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "adadelta") return OptimizerKind::adadelta;
  if (s == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + s + "' (expected adam, adadelta or sgd)");
}

namespace {

void check_aligned(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) {
    throw ContractError("optimizer got " + std::to_string(params.size()) + " parameters but " +
                        std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size()) {
      throw ContractError("gradient " + std::to_string(i) + " has " + std::to_string(grads[i].size()) +
                          " values for a parameter of " + std::to_string(params[i].size()));
    }
  }
}

void ensure_slots(std::vector<std::vector<double>>& slots, std::span<const std::span<double>> params) {
  if (slots.empty()) {
    for (auto p : params) slots.emplace_back(p.size(), 0.0);
    return;
  }
  if (slots.size() != params.size()) throw ContractError("optimizer state does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (slots[i].size() != params[i].size()) {
      throw ContractError("optimizer state for parameter " + std::to_string(i) + " has the wrong size");
    }
  }
}

}  // namespace

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& s, double lr) {
  check_aligned(params, grads);
  ensure_slots(s.m, params);
  ensure_slots(s.v, params);
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    auto& m = s.m[i];
    auto& v = s.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * g[k];
      v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * g[k] * g[k];
      p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + s.epsilon);
    }
  }
}

void adadelta_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                   AdadeltaState& s, double lr) {
  check_aligned(params, grads);
  ensure_slots(s.sq_grad, params);
  ensure_slots(s.sq_update, params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    auto& eg = s.sq_grad[i];
    auto& ex = s.sq_update[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      eg[k] = s.rho * eg[k] + (1.0 - s.rho) * g[k] * g[k];
      const double dx = -std::sqrt(ex[k] + s.epsilon) / std::sqrt(eg[k] + s.epsilon) * g[k];
      ex[k] = s.rho * ex[k] + (1.0 - s.rho) * dx * dx;
      p[k] += lr * dx;
    }
  }
}

void sgd_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
              double lr) {
  check_aligned(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i].size(); ++k) params[i][k] -= lr * grads[i][k];
  }
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

void Optimizer::step(std::span<Tensor* const> params) {
  std::vector<std::span<double>> p;
  std::vector<std::span<const double>> g;
  p.reserve(params.size());
  g.reserve(params.size());
  for (Tensor* t : params) {
    p.push_back(t->data());
    g.push_back(t->grad_buffer());
  }
  switch (kind_) {
    case OptimizerKind::adam: adam_step(p, g, adam_, lr_); break;
    case OptimizerKind::adadelta: adadelta_step(p, g, adadelta_, lr_); break;
    case OptimizerKind::sgd: sgd_step(p, g, lr_); break;
  }
  ++steps_;
}

}  // namespace mcm
