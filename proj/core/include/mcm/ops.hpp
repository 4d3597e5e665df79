// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include "mcm/tape.hpp"

// Differentiable tensor operations. Shapes are never broadcast implicitly;
// use `broadcast` to align operands. Violations raise ShapeError.
namespace mcm {

enum class Elementwise { add, sub, mul, sigmoid, tanh, relu };
enum class Reduce { max, mean, sum };

Var elementwise(Elementwise kind, Var a, std::optional<Var> b = std::nullopt);
inline Var add(Var a, Var b) { return elementwise(Elementwise::add, a, b); }
inline Var sub(Var a, Var b) { return elementwise(Elementwise::sub, a, b); }
inline Var mul(Var a, Var b) { return elementwise(Elementwise::mul, a, b); }
inline Var sigmoid(Var a) { return elementwise(Elementwise::sigmoid, a); }
inline Var tanh(Var a) { return elementwise(Elementwise::tanh, a); }
inline Var relu(Var a) { return elementwise(Elementwise::relu, a); }

/// Multiply by a constant.
Var scale(Var a, double factor);

/// (m x k) * (k x n).
Var matmul(Var a, Var b);

/// Reduces one axis away. Max routes its gradient to the first maximal element.
Var reduce(Reduce kind, Var a, std::size_t axis);
/// Sum of every element as a shape-{1} tensor.
Var sum_all(Var a);

Var concat(std::span<const Var> parts, std::size_t axis);
inline Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}
/// Joins equally shaped tensors along a new axis.
Var stack(std::span<const Var> parts, std::size_t axis);

Var reshape(Var a, Shape shape);
/// Half-open range [begin, end) along `axis`.
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
/// Picks one index along `axis` and drops that axis.
Var select(Var a, std::size_t axis, std::size_t index);
/// Repeats `a` n times along a new axis inserted at `axis`.
Var broadcast(Var a, std::size_t axis, std::size_t n);

/// Softmax over the last axis, max-shifted.
Var softmax(Var a);

/// Rows of a rank-2 table. Gradients scatter-add back; `frozen_row` never
/// receives gradient.
Var gather_rows(Var table, std::span<const std::size_t> ids,
                std::optional<std::size_t> frozen_row = std::nullopt);

/// Identity forward; blocks gradient flow.
Var stop_gradient(Var a);

}  // namespace mcm
