// SPDX-License-Identifier: Apache-2.0
#include "mcm/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "mcm/errors.hpp"

namespace mcm {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

// View of a tensor as [outer, extent, inner] around one axis.
struct AxisView {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisView split_at(const Shape& s, std::size_t axis) {
  if (axis >= s.rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + s.str());
  }
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.rank(); ++i) v.inner *= s[i];
  return v;
}

const char* kind_name(Elementwise k) {
  switch (k) {
    case Elementwise::add: return "add";
    case Elementwise::sub: return "sub";
    case Elementwise::mul: return "mul";
    case Elementwise::sigmoid: return "sigmoid";
    case Elementwise::tanh: return "tanh";
    case Elementwise::relu: return "relu";
  }
  return "?";
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var elementwise(Elementwise kind, Var a, std::optional<Var> b) {
  Tape& tape = a.tape();
  const Tensor& av = a.value();
  const std::size_t n = av.numel();
  Tensor out(av.shape());
  auto y = out.data();
  auto x = av.data();
  const std::size_t ia = a.id();

  const bool binary =
      kind == Elementwise::add || kind == Elementwise::sub || kind == Elementwise::mul;
  if (binary) {
    if (!b) throw ShapeError(std::string(kind_name(kind)) + " requires two operands");
    const Tensor& bv = b->value();
    if (bv.shape() != av.shape()) {
      throw ShapeError(std::string(kind_name(kind)) + ": shape mismatch " + av.shape().str() +
                       " vs " + bv.shape().str());
    }
    auto z = bv.data();
    const std::size_t ib = b->id();
    switch (kind) {
      case Elementwise::add:
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + z[i];
        break;
      case Elementwise::sub:
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - z[i];
        break;
      default:
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * z[i];
        break;
    }
    const Var operands[] = {a, *b};
    return tape.record(std::move(out), operands, [kind, ia, ib](Tape& t, std::span<const double> g) {
      const std::size_t m = g.size();
      if (t.requires_grad(ia)) {
        auto ga = t.grad(ia);
        if (kind == Elementwise::mul) {
          auto bz = t.value(ib).data();
          for (std::size_t i = 0; i < m; ++i) ga[i] += g[i] * bz[i];
        } else {
          for (std::size_t i = 0; i < m; ++i) ga[i] += g[i];
        }
      }
      if (t.requires_grad(ib)) {
        auto gb = t.grad(ib);
        if (kind == Elementwise::mul) {
          auto ax = t.value(ia).data();
          for (std::size_t i = 0; i < m; ++i) gb[i] += g[i] * ax[i];
        } else if (kind == Elementwise::sub) {
          for (std::size_t i = 0; i < m; ++i) gb[i] -= g[i];
        } else {
          for (std::size_t i = 0; i < m; ++i) gb[i] += g[i];
        }
      }
    });
  }

  switch (kind) {
    case Elementwise::sigmoid:
      for (std::size_t i = 0; i < n; ++i) y[i] = stable_sigmoid(x[i]);
      break;
    case Elementwise::tanh:
      for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
      break;
    default:
      // NaN passes through so a diverged activation still reaches the loss.
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 || std::isnan(x[i]) ? x[i] : 0.0;
      break;
  }
  const Var operands[] = {a};
  const std::size_t self = tape.size();
  return tape.record(std::move(out), operands, [kind, ia, self](Tape& t, std::span<const double> g) {
    auto ga = t.grad(ia);
    const std::size_t m = g.size();
    if (kind == Elementwise::relu) {
      auto ax = t.value(ia).data();
      for (std::size_t i = 0; i < m; ++i) ga[i] += ax[i] > 0.0 ? g[i] : 0.0;
      return;
    }
    auto yv = t.value(self).data();
    if (kind == Elementwise::sigmoid) {
      for (std::size_t i = 0; i < m; ++i) ga[i] += g[i] * yv[i] * (1.0 - yv[i]);
    } else {
      for (std::size_t i = 0; i < m; ++i) ga[i] += g[i] * (1.0 - yv[i] * yv[i]);
    }
  });
}

Var scale(Var a, double factor) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] * factor;
  const std::size_t ia = a.id();
  const Var operands[] = {a};
  return a.tape().record(std::move(out), operands, [ia, factor](Tape& t, std::span<const double> g) {
    auto ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2) {
    throw ShapeError("matmul expects rank-2 operands, got " + av.shape().str() + " and " +
                     bv.shape().str());
  }
  const auto m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  if (bv.shape()[0] != k) {
    throw ShapeError("matmul inner dimensions differ: " + av.shape().str() + " * " +
                     bv.shape().str());
  }
  Tensor out(Shape{m, n});
  MutMap(out.data().data(), m, n).noalias() =
      ConstMap(av.data().data(), m, k) * ConstMap(bv.data().data(), k, n);

  const std::size_t ia = a.id(), ib = b.id();
  const Var operands[] = {a, b};
  return a.tape().record(std::move(out), operands, [ia, ib, m, k, n](Tape& t, std::span<const double> g) {
    ConstMap dc(g.data(), m, n);
    if (t.requires_grad(ia)) {
      MutMap(t.grad(ia).data(), m, k).noalias() +=
          dc * ConstMap(t.value(ib).data().data(), k, n).transpose();
    }
    if (t.requires_grad(ib)) {
      MutMap(t.grad(ib).data(), k, n).noalias() +=
          ConstMap(t.value(ia).data().data(), m, k).transpose() * dc;
    }
  });
}

Var reduce(Reduce kind, Var a, std::size_t axis) {
  const Tensor& av = a.value();
  const AxisView v = split_at(av.shape(), axis);
  Tensor out(av.shape().without(axis));
  auto x = av.data();
  auto y = out.data();
  std::vector<std::size_t> argmax;
  if (kind == Reduce::max) argmax.resize(v.outer * v.inner);

  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.extent * v.inner + i;
      const std::size_t dst = o * v.inner + i;
      if (kind == Reduce::max) {
        std::size_t best = 0;
        double bestv = x[base];
        for (std::size_t j = 1; j < v.extent; ++j) {
          const double c = x[base + j * v.inner];
          if (c > bestv || (std::isnan(c) && !std::isnan(bestv))) {  // strict: first occurrence wins ties
            bestv = c;
            best = j;
          }
        }
        y[dst] = bestv;
        argmax[dst] = best;
      } else {
        double s = 0.0;
        for (std::size_t j = 0; j < v.extent; ++j) s += x[base + j * v.inner];
        y[dst] = kind == Reduce::mean ? s / static_cast<double>(v.extent) : s;
      }
    }
  }

  const std::size_t ia = a.id();
  const Var operands[] = {a};
  return a.tape().record(std::move(out), operands,
                         [kind, ia, v, argmax = std::move(argmax)](Tape& t, std::span<const double> g) {
                           auto ga = t.grad(ia);
                           const double w = kind == Reduce::mean ? 1.0 / static_cast<double>(v.extent) : 1.0;
                           for (std::size_t o = 0; o < v.outer; ++o) {
                             for (std::size_t i = 0; i < v.inner; ++i) {
                               const std::size_t base = o * v.extent * v.inner + i;
                               const std::size_t src = o * v.inner + i;
                               if (kind == Reduce::max) {
                                 ga[base + argmax[src] * v.inner] += g[src];
                               } else {
                                 for (std::size_t j = 0; j < v.extent; ++j) ga[base + j * v.inner] += g[src] * w;
                               }
                             }
                           }
                         });
}

Var sum_all(Var a) {
  const Tensor& av = a.value();
  double s = 0.0;
  for (double x : av.data()) s += x;
  const std::size_t ia = a.id();
  const Var operands[] = {a};
  return a.tape().record(Tensor::scalar(s), operands, [ia](Tape& t, std::span<const double> g) {
    auto ga = t.grad(ia);
    for (double& x : ga) x += g[0];
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  std::size_t total = 0;
  std::vector<std::size_t> extents;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.rank() != first.rank()) throw ShapeError("concat rank mismatch");
    for (std::size_t d = 0; d < s.rank(); ++d) {
      if (d != axis && s[d] != first[d]) {
        throw ShapeError("concat: incompatible shapes " + first.str() + " and " + s.str());
      }
    }
    const AxisView v = split_at(s, axis);
    extents.push_back(v.extent);
    total += v.extent;
  }
  const AxisView base = split_at(first, axis);
  Tensor out(first.with(axis, total));
  auto y = out.data();
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto x = parts[p].value().data();
    const std::size_t block = extents[p] * base.inner;
    for (std::size_t o = 0; o < base.outer; ++o) {
      std::copy_n(x.begin() + o * block, block, y.begin() + o * total * base.inner + offset);
    }
    offset += block;
  }

  std::vector<std::size_t> ids;
  for (const auto& p : parts) ids.push_back(p.id());
  return parts[0].tape().record(
      std::move(out), parts,
      [ids = std::move(ids), extents = std::move(extents), base, total](Tape& t, std::span<const double> g) {
        std::size_t off = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
          const std::size_t block = extents[p] * base.inner;
          if (t.requires_grad(ids[p])) {
            auto gp = t.grad(ids[p]);
            for (std::size_t o = 0; o < base.outer; ++o) {
              const double* src = g.data() + o * total * base.inner + off;
              double* dst = gp.data() + o * block;
              for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
            }
          }
          off += block;
        }
      });
}

Var stack(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("stack of zero tensors");
  const Shape& s = parts[0].shape();
  std::vector<Var> expanded;
  expanded.reserve(parts.size());
  for (const auto& p : parts) {
    if (p.shape() != s) throw ShapeError("stack: shape mismatch " + s.str() + " vs " + p.shape().str());
    expanded.push_back(reshape(p, s.with_inserted(axis, 1)));
  }
  return concat(expanded, axis);
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ia = a.id();
  const Var operands[] = {a};
  return a.tape().record(std::move(out), operands, [ia](Tape& t, std::span<const double> g) {
    auto ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  const AxisView v = split_at(av.shape(), axis);
  if (begin >= end || end > v.extent) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for axis of size " + std::to_string(v.extent));
  }
  const std::size_t width = end - begin;
  Tensor out(av.shape().with(axis, width));
  auto x = av.data();
  auto y = out.data();
  const std::size_t block = width * v.inner;
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::copy_n(x.begin() + (o * v.extent + begin) * v.inner, block, y.begin() + o * block);
  }
  const std::size_t ia = a.id();
  const Var operands[] = {a};
  return a.tape().record(std::move(out), operands, [ia, v, begin, block](Tape& t, std::span<const double> g) {
    auto ga = t.grad(ia);
    for (std::size_t o = 0; o < v.outer; ++o) {
      double* dst = ga.data() + (o * v.extent + begin) * v.inner;
      const double* src = g.data() + o * block;
      for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
    }
  });
}

Var select(Var a, std::size_t axis, std::size_t index) {
  const Shape s = a.shape();
  return reshape(slice(a, axis, index, index + 1), s.without(axis));
}

Var broadcast(Var a, std::size_t axis, std::size_t n) {
  const Tensor& av = a.value();
  const Shape out_shape = av.shape().with_inserted(axis, n);
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= av.shape()[i];
  const std::size_t inner = av.numel() / outer;
  Tensor out(out_shape);
  auto x = av.data();
  auto y = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < n; ++j) {
      std::copy_n(x.begin() + o * inner, inner, y.begin() + (o * n + j) * inner);
    }
  }
  const std::size_t ia = a.id();
  const Var operands[] = {a};
  return a.tape().record(std::move(out), operands, [ia, outer, inner, n](Tape& t, std::span<const double> g) {
    auto ga = t.grad(ia);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t j = 0; j < n; ++j) {
        const double* src = g.data() + (o * n + j) * inner;
        double* dst = ga.data() + o * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Var softmax(Var a) {
  const Tensor& av = a.value();
  const std::size_t cols = av.shape()[av.rank() - 1];
  const std::size_t rows = av.numel() / cols;
  Tensor out(av.shape());
  auto x = av.data();
  auto y = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * cols;
    double* yr = y.data() + r * cols;
    const double mx = *std::max_element(xr, xr + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (yr[c] = std::exp(xr[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= z;
  }
  const std::size_t ia = a.id();
  const std::size_t self = a.tape().size();
  const Var operands[] = {a};
  return a.tape().record(std::move(out), operands, [ia, self, rows, cols](Tape& t, std::span<const double> g) {
    auto ga = t.grad(ia);
    auto yv = t.value(self).data();
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * yv[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += yv[r * cols + c] * (g[r * cols + c] - dot);
    }
  });
}

Var gather_rows(Var table, std::span<const std::size_t> ids, std::optional<std::size_t> frozen_row) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw ShapeError("gather_rows expects a rank-2 table, got " + tv.shape().str());
  if (ids.empty()) throw ContractError("gather_rows: empty id list");
  const std::size_t vocab = tv.shape()[0], dim = tv.shape()[1];
  Tensor out(Shape{ids.size(), dim});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab) {
      throw ContractError("token id " + std::to_string(ids[r]) + " out of range for vocabulary of " +
                          std::to_string(vocab));
    }
    std::copy_n(tv.data().begin() + ids[r] * dim, dim, out.data().begin() + r * dim);
  }
  const std::size_t it = table.id();
  const Var operands[] = {table};
  return table.tape().record(
      std::move(out), operands,
      [it, dim, frozen_row, idv = std::vector<std::size_t>(ids.begin(), ids.end())](Tape& t,
                                                                                    std::span<const double> g) {
        auto gt = t.grad(it);
        for (std::size_t r = 0; r < idv.size(); ++r) {
          if (frozen_row && idv[r] == *frozen_row) continue;
          double* dst = gt.data() + idv[r] * dim;
          const double* src = g.data() + r * dim;
          for (std::size_t c = 0; c < dim; ++c) dst[c] += src[c];
        }
      });
}

Var stop_gradient(Var a) { return a.tape().constant(a.value()); }

}  // namespace mcm
