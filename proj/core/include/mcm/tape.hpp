// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <deque>
#include <vector>

#include "mcm/tensor.hpp"

namespace mcm {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t numel() const { return value().numel(); }
  bool requires_grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run record of one forward pass. Nodes are appended in execution
/// order, so operands always precede their consumers and a single reverse
/// sweep visits every node once.
class Tape {
 public:
  /// Receives the output gradient and adds operand gradients via `Tape::grad`.
  using Backward = std::function<void(Tape&, std::span<const double> out_grad)>;

  /// With `recording` off no gradient rules are stored (inference).
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Binds an externally owned parameter. Its gradient accumulates into
  /// `param.grad_buffer()` when `param.grad_enabled()`. The parameter must
  /// outlive the tape and stay unmodified until backward completes.
  Var leaf(Tensor& param);
  /// Appends an operation result. `rule` is dropped when no operand requires grad.
  Var record(Tensor value, std::span<const Var> operands, Backward rule);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  /// Gradient accumulator of node `id`; allocated as zeros on first access.
  std::span<double> grad(std::size_t id);
  /// Gradient of a node after backward; empty if nothing flowed into it.
  std::span<const double> grad_of(Var v) const;

  /// Reverse sweep from a single-element loss.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  bool recording() const { return recording_; }

 private:
  struct Node {
    Tensor owned;
    Tensor* param = nullptr;
    std::vector<double> grad;
    Backward rule;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
  bool recording_;
  bool consumed_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

}  // namespace mcm
