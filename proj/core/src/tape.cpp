// SPDX-License-Identifier: Apache-2.0
#include "mcm/tape.hpp"

#include "mcm/errors.hpp"

namespace mcm {

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor& param) {
  Node n;
  n.param = &param;
  n.requires_grad = recording_ && param.grad_enabled();
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> operands, Backward rule) {
  Node n;
  n.owned = std::move(value);
  if (recording_) {
    for (const auto& op : operands) {
      if (op.tape().requires_grad(op.id())) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.rule = std::move(rule);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
  const auto& n = nodes_.at(id);
  return n.param ? *n.param : n.owned;
}

std::span<double> Tape::grad(std::size_t id) {
  auto& n = nodes_.at(id);
  if (n.grad.empty()) n.grad.assign(value(id).numel(), 0.0);
  return n.grad;
}

std::span<const double> Tape::grad_of(Var v) const { return nodes_.at(v.id()).grad; }

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw ContractError("backward on an empty tape");
  if (&loss.tape() != this) throw ContractError("loss belongs to a different tape");
  if (loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + loss.shape().str());
  }
  if (consumed_) throw ContractError("backward already ran on this tape");
  consumed_ = true;
  if (!nodes_[loss.id()].requires_grad) return;

  grad(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.param) {
      auto dst = n.param->grad_buffer();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
    } else if (n.rule) {
      // The rule may allocate grads of earlier nodes; deque keeps `n` valid.
      n.rule(*this, n.grad);
    }
  }
}

}  // namespace mcm
