// Copyright 2026 The lrcnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lrcnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "lrcnet/error.hpp"

namespace lrcnet {

namespace {

using Node = detail::TensorNode;
using NodePtr = std::shared_ptr<Node>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

// Vectorized kernels peel by pointer alignment, so products run on aligned
// copies to keep results independent of where the heap placed the operands.
RowMatrix owned(const double* data, Eigen::Index rows, Eigen::Index cols) {
  return ConstMap(data, rows, cols);
}

// y = x W + b, row-major. Every output element accumulates b_j + sum_k x_k W_kj
// in increasing k with identical arithmetic, independent of its row index or
// the row count, so set functions stay exactly invariant to permutation and
using Vec4 = double __attribute__((vector_size(32)));

void load4(Vec4& v, const double* p) { std::memcpy(&v, p, sizeof v); }

void store4(double* p, const Vec4& v) { std::memcpy(p, &v, sizeof v); }

// Rows [r, r + RT) by columns [c, c + 8) of y = x W + b, held in registers.
template <std::size_t RT>
void dense_tile8(const double* x, const double* w, const double* b, double* y, std::size_t in, std::size_t out,
                 std::size_t r, std::size_t c) {
  Vec4 lo[RT], hi[RT];
  for (std::size_t i = 0; i < RT; ++i) {
    lo[i] = Vec4{0.0, 0.0, 0.0, 0.0};
    hi[i] = lo[i];
    if (b) {
      load4(lo[i], b + c);
      load4(hi[i], b + c + 4);
    }
  }
  for (std::size_t k = 0; k < in; ++k) {
    Vec4 w0, w1;
    load4(w0, w + k * out + c);
    load4(w1, w + k * out + c + 4);
    for (std::size_t i = 0; i < RT; ++i) {
      const double a = x[(r + i) * in + k];
      lo[i] += a * w0;
      hi[i] += a * w1;
    }
  }
  for (std::size_t i = 0; i < RT; ++i) {
    store4(y + (r + i) * out + c, lo[i]);
    store4(y + (r + i) * out + c + 4, hi[i]);
  }
}

// Single output column, same accumulation order as the vector tiles.
void dense_column(const double* x, const double* w, const double* b, double* y, std::size_t in, std::size_t out,
                  std::size_t r, std::size_t c) {
  double acc = b ? b[c] : 0.0;
  for (std::size_t k = 0; k < in; ++k) acc += x[r * in + k] * w[k * out + c];
  y[r * out + c] = acc;
}

// y = x W + b, row-major. Every output element accumulates b_j + sum_k x_k W_kj
// in increasing k with the same arithmetic whatever its tile, so the value
// of a row never depends on its index or on the row count. This keeps set
// functions exactly invariant to permutation and duplication of rows.
void dense_forward(const double* x, const double* w, const double* b, double* y, std::size_t rows,
                   std::size_t in, std::size_t out) {
  constexpr std::size_t kRows = 4, kCols = 8;
  const std::size_t full_cols = out - out % kCols;
  const std::size_t full_rows = rows - rows % kRows;
  for (std::size_t c = 0; c < full_cols; c += kCols) {
    for (std::size_t r = 0; r < full_rows; r += kRows) dense_tile8<kRows>(x, w, b, y, in, out, r, c);
    for (std::size_t r = full_rows; r < rows; ++r) dense_tile8<1>(x, w, b, y, in, out, r, c);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = full_cols; c < out; ++c) dense_column(x, w, b, y, in, out, r, c);
  }
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw Error("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void check_finite(std::span<const double> values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

/// Grad of an op output, or nullptr when nothing flowed into it.
const double* upstream(const NodePtr& y) { return y->grad.empty() ? nullptr : y->grad.data(); }

double* grad_of(const NodePtr& n) {
  n->ensure_grad();
  return n->grad.data();
}

Tensor finish(Shape shape, std::vector<double> values, bool rg, const char* op) {
  check_finite(values, op);
  return make_result(std::move(shape), std::move(values), rg);
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor make_result(Shape shape, std::vector<double> values, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::make_shared<std::vector<double>>(std::move(values));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw Error("tensor data length " + std::to_string(values.size()) + " does not match shape " +
                shape_string(shape));
  }
  check_finite(values, "tensor construction");
  Tensor t = make_result(std::move(shape), std::move(values), requires_grad);
  if (requires_grad) t.node_->ensure_grad();
  return t;
}

Tensor Tensor::wrap(Shape shape, std::shared_ptr<std::vector<double>> storage, bool requires_grad) {
  if (!storage || shape_numel(shape) != storage->size()) {
    throw Error("wrapped storage does not match shape " + shape_string(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(storage);
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return Tensor(std::move(node));
}

double Tensor::item() const {
  if (numel() != 1) throw Error("item() on tensor of shape " + shape_string(shape()));
  return (*node_->value)[0];
}

void Tape::record(std::function<void()> backward_fn) {
  if (consumed_) throw Error("tape already consumed by backward()");
  ops_.push_back(std::move(backward_fn));
}

void Tape::note_branch(std::uint64_t value) {
  signature_ = mix64(signature_ ^ mix64(value + 0x9e3779b97f4a7c15ULL));
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw Error("backward() called twice on a consumed tape");
  if (!loss.defined() || loss.numel() != 1) throw Error("backward() needs a single-element loss");
  if (!loss.requires_grad()) throw Error("loss does not depend on any tensor requiring grad");
  consumed_ = true;
  loss.node().ensure_grad();
  loss.node().grad[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  ops_.clear();
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& W, const Tensor& b) {
  if (W.rank() != 2 || x.rank() < 1 || x.shape().back() != W.dim(0)) {
    throw Error("linear: shape mismatch x" + shape_string(x.shape()) + " W" + shape_string(W.shape()));
  }
  const auto in = static_cast<Eigen::Index>(W.dim(0));
  const auto out = static_cast<Eigen::Index>(W.dim(1));
  if (b.defined() && (b.rank() != 1 || b.dim(0) != W.dim(1))) {
    throw Error("linear: bias shape " + shape_string(b.shape()) + " does not match W" +
                shape_string(W.shape()));
  }
  const auto rows = static_cast<Eigen::Index>(x.numel() / W.dim(0));
  Shape shape = x.shape();
  shape.back() = W.dim(1);

  const auto n_rows = static_cast<std::size_t>(rows);
  std::vector<double> y(n_rows * static_cast<std::size_t>(out));
  dense_forward(x.data().data(), W.data().data(), b.defined() ? b.data().data() : nullptr, y.data(), n_rows,
                static_cast<std::size_t>(in), static_cast<std::size_t>(out));

  const bool rg = x.requires_grad() || W.requires_grad() || (b.defined() && b.requires_grad());
  Tensor result = finish(std::move(shape), std::move(y), rg, "linear");
  if (rg) {
    tape.record([xn = x.node_ptr(), wn = W.node_ptr(), bn = b.defined() ? b.node_ptr() : nullptr,
                 yn = result.node_ptr(), rows, in, out] {
      const double* gy = upstream(yn);
      if (!gy) return;
      const RowMatrix dY = owned(gy, rows, out);
      if (xn->requires_grad) {
        const RowMatrix dx = dY * owned(wn->value->data(), in, out).transpose();
        MutMap(grad_of(xn), rows, in) += dx;
      }
      if (wn->requires_grad) {
        const RowMatrix dw = owned(xn->value->data(), rows, in).transpose() * dY;
        MutMap(grad_of(wn), in, out) += dw;
      }
      if (bn && bn->requires_grad) {
        double* db = grad_of(bn);
        for (Eigen::Index r = 0; r < rows; ++r) {
          for (Eigen::Index c = 0; c < out; ++c) db[c] += dY(r, c);
        }
      }
    });
  }
  return result;
}

Tensor relu(Tape& tape, const Tensor& x) {
  std::vector<double> y(x.data().begin(), x.data().end());
  for (double& v : y) v = v > 0.0 ? v : 0.0;
  if (tape.track_branches()) {
    std::uint64_t word = 0;
    const auto& xv = x.data();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      word = (word << 1) | (xv[i] > 0.0 ? 1u : 0u);
      if (i % 64 == 63 || i + 1 == xv.size()) {
        tape.note_branch(word);
        word = 0;
      }
    }
  }
  Tensor result = finish(x.shape(), std::move(y), x.requires_grad(), "relu");
  if (x.requires_grad()) {
    tape.record([xn = x.node_ptr(), yn = result.node_ptr()] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gx = grad_of(xn);
      const auto& xv = *xn->value;
      for (std::size_t i = 0; i < xv.size(); ++i) {
        if (xv[i] > 0.0) gx[i] += gy[i];
      }
    });
  }
  return result;
}

Tensor max_reduce(Tape& tape, const Tensor& x, std::size_t axis) {
  const auto s = split_axis(x.shape(), axis);
  if (s.len == 0) throw Error("max_reduce: empty axis");
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> y(s.outer * s.inner);
  std::vector<std::size_t> arg(s.outer * s.inner);
  const double* xv = x.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    const double* base = xv + o * s.len * s.inner;
    double* yrow = y.data() + o * s.inner;
    std::size_t* arow = arg.data() + o * s.inner;
    std::copy(base, base + s.inner, yrow);
    std::fill(arow, arow + s.inner, std::size_t{0});
    for (std::size_t l = 1; l < s.len; ++l) {
      const double* row = base + l * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) {
        if (row[i] > yrow[i]) {
          yrow[i] = row[i];
          arow[i] = l;
        }
      }
    }
  }
  if (tape.track_branches()) {
    for (std::size_t a : arg) tape.note_branch(a);
  }
  Tensor result = finish(std::move(shape), std::move(y), x.requires_grad(), "max_reduce");
  if (x.requires_grad()) {
    tape.record([xn = x.node_ptr(), yn = result.node_ptr(), s, arg = std::move(arg)] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gx = grad_of(xn);
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          const std::size_t k = o * s.inner + i;
          gx[(o * s.len + arg[k]) * s.inner + i] += gy[k];
        }
      }
    });
  }
  return result;
}

namespace {

Tensor linear_reduce(Tape& tape, const Tensor& x, std::size_t axis, bool mean, const char* op) {
  const auto s = split_axis(x.shape(), axis);
  if (s.len == 0) throw Error(std::string(op) + ": empty axis");
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const double factor = mean ? 1.0 / static_cast<double>(s.len) : 1.0;
  std::vector<double> y(s.outer * s.inner, 0.0);
  const double* xv = x.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    double* yrow = y.data() + o * s.inner;
    for (std::size_t l = 0; l < s.len; ++l) {
      const double* row = xv + (o * s.len + l) * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) yrow[i] += row[i];
    }
    if (mean) {
      for (std::size_t i = 0; i < s.inner; ++i) yrow[i] /= static_cast<double>(s.len);
    }
  }
  Tensor result = finish(std::move(shape), std::move(y), x.requires_grad(), op);
  if (x.requires_grad()) {
    tape.record([xn = x.node_ptr(), yn = result.node_ptr(), s, factor] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gx = grad_of(xn);
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t l = 0; l < s.len; ++l) {
          double* row = gx + (o * s.len + l) * s.inner;
          for (std::size_t i = 0; i < s.inner; ++i) row[i] += factor * gy[o * s.inner + i];
        }
      }
    });
  }
  return result;
}

}  // namespace

Tensor mean_reduce(Tape& tape, const Tensor& x, std::size_t axis) {
  return linear_reduce(tape, x, axis, true, "mean_reduce");
}

Tensor sum_reduce(Tape& tape, const Tensor& x, std::size_t axis) {
  return linear_reduce(tape, x, axis, false, "sum_reduce");
}

Tensor sum_all(Tape& tape, const Tensor& x) {
  return sum_reduce(tape, reshape(tape, x, {1, x.numel()}), 1);
}

Tensor concat(Tape& tape, std::span<const Tensor> xs, std::size_t axis) {
  if (xs.empty()) throw Error("concat: no inputs");
  const Shape& first = xs.front().shape();
  if (axis >= first.size()) throw Error("concat: axis out of range");
  Shape shape = first;
  shape[axis] = 0;
  bool rg = false;
  for (const auto& x : xs) {
    if (x.rank() != first.size()) throw Error("concat: rank mismatch");
    for (std::size_t d = 0; d < first.size(); ++d) {
      if (d != axis && x.dim(d) != first[d]) {
        throw Error("concat: shape mismatch " + shape_string(first) + " vs " + shape_string(x.shape()));
      }
    }
    shape[axis] += x.dim(axis);
    rg = rg || x.requires_grad();
  }
  const auto s = split_axis(shape, axis);
  std::vector<double> y(shape_numel(shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& x : xs) {
    const std::size_t chunk = x.dim(axis) * s.inner;
    const double* xv = x.data().data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy(xv + o * chunk, xv + (o + 1) * chunk, y.data() + o * s.len * s.inner + offset);
    }
    offsets.push_back(offset);
    offset += chunk;
  }
  Tensor result = finish(std::move(shape), std::move(y), rg, "concat");
  if (rg) {
    std::vector<NodePtr> nodes;
    for (const auto& x : xs) nodes.push_back(x.node_ptr());
    tape.record([nodes = std::move(nodes), offsets = std::move(offsets), yn = result.node_ptr(), s, axis] {
      const double* gy = upstream(yn);
      if (!gy) return;
      for (std::size_t n = 0; n < nodes.size(); ++n) {
        if (!nodes[n]->requires_grad) continue;
        const std::size_t chunk = nodes[n]->shape[axis] * s.inner;
        double* gx = grad_of(nodes[n]);
        for (std::size_t o = 0; o < s.outer; ++o) {
          const double* src = gy + o * s.len * s.inner + offsets[n];
          double* dst = gx + o * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return result;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw Error("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
  }
  std::vector<double> y(x.data().begin(), x.data().end());
  Tensor result = make_result(std::move(shape), std::move(y), x.requires_grad());
  if (x.requires_grad()) {
    tape.record([xn = x.node_ptr(), yn = result.node_ptr()] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gx = grad_of(xn);
      for (std::size_t i = 0; i < xn->value->size(); ++i) gx[i] += gy[i];
    });
  }
  return result;
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
  std::vector<double> y(x.data().begin(), x.data().end());
  for (double& v : y) v *= factor;
  Tensor result = finish(x.shape(), std::move(y), x.requires_grad(), "scale");
  if (x.requires_grad()) {
    tape.record([xn = x.node_ptr(), yn = result.node_ptr(), factor] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gx = grad_of(xn);
      for (std::size_t i = 0; i < xn->value->size(); ++i) gx[i] += factor * gy[i];
    });
  }
  return result;
}

Tensor dropout(Tape& tape, const Tensor& x, double rate, CounterRng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout: rate must lie in [0, 1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.numel());
  for (double& m : mask) m = rng.uniform() >= rate ? keep_scale : 0.0;
  std::vector<double> y(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  Tensor result = finish(x.shape(), std::move(y), x.requires_grad(), "dropout");
  if (x.requires_grad()) {
    tape.record([xn = x.node_ptr(), yn = result.node_ptr(), mask = std::move(mask)] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gx = grad_of(xn);
      for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += mask[i] * gy[i];
    });
  }
  return result;
}

Tensor unfold_windows(Tape& tape, const Tensor& x, std::size_t h) {
  if (x.rank() != 3) throw Error("unfold_windows: expected [M, T, D], got " + shape_string(x.shape()));
  const std::size_t m = x.dim(0), t = x.dim(1), d = x.dim(2);
  if (h < 1 || h > t) {
    throw Error("unfold_windows: window " + std::to_string(h) + " exceeds scale count " + std::to_string(t));
  }
  const std::size_t windows = t - h + 1;
  const std::size_t width = h * d;
  std::vector<double> y(m * windows * width);
  const double* xv = x.data().data();
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t a = 0; a < windows; ++a) {
      const double* src = xv + (j * t + a) * d;
      std::copy(src, src + width, y.data() + (j * windows + a) * width);
    }
  }
  Tensor result = make_result({m, windows, width}, std::move(y), x.requires_grad());
  if (x.requires_grad()) {
    tape.record([xn = x.node_ptr(), yn = result.node_ptr(), m, t, d, windows, width] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gx = grad_of(xn);
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t a = 0; a < windows; ++a) {
          const double* src = gy + (j * windows + a) * width;
          double* dst = gx + (j * t + a) * d;
          for (std::size_t i = 0; i < width; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return result;
}

Tensor broadcast_rows(Tape& tape, const Tensor& x, std::size_t n) {
  if (!(x.rank() == 1 || (x.rank() == 2 && x.dim(0) == 1))) {
    throw Error("broadcast_rows: expected [D] or [1, D], got " + shape_string(x.shape()));
  }
  const std::size_t d = x.numel();
  std::vector<double> y(n * d);
  for (std::size_t r = 0; r < n; ++r) std::copy(x.data().begin(), x.data().end(), y.begin() + r * d);
  Tensor result = make_result({n, d}, std::move(y), x.requires_grad());
  if (x.requires_grad()) {
    tape.record([xn = x.node_ptr(), yn = result.node_ptr(), n, d] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gx = grad_of(xn);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < d; ++i) gx[i] += gy[r * d + i];
      }
    });
  }
  return result;
}

Tensor mix_rows(Tape& tape, const RowMatrix& A, const Tensor& x, std::span<const double> divisor) {
  if (x.rank() != 2 || static_cast<std::size_t>(A.cols()) != x.dim(0)) {
    throw Error("mix_rows: weights " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                " do not match x" + shape_string(x.shape()));
  }
  const auto p = static_cast<std::size_t>(A.rows());
  const std::size_t q = x.dim(0), d = x.dim(1);
  if (!divisor.empty() && divisor.size() != p) throw Error("mix_rows: divisor length mismatch");
  std::vector<double> y(p * d, 0.0);
  const double* xv = x.data().data();
  for (std::size_t j = 0; j < p; ++j) {
    double* yrow = y.data() + j * d;
    for (std::size_t b = 0; b < q; ++b) {
      const double w = A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b));
      const double* xrow = xv + b * d;
      for (std::size_t i = 0; i < d; ++i) yrow[i] += w * xrow[i];
    }
    if (!divisor.empty()) {
      for (std::size_t i = 0; i < d; ++i) yrow[i] /= divisor[j];
    }
  }
  Tensor result = finish({p, d}, std::move(y), x.requires_grad(), "mix_rows");
  if (x.requires_grad()) {
    std::vector<double> div(divisor.begin(), divisor.end());
    tape.record([xn = x.node_ptr(), yn = result.node_ptr(), A, div = std::move(div), p, q, d] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gx = grad_of(xn);
      for (std::size_t j = 0; j < p; ++j) {
        const double inv = div.empty() ? 1.0 : 1.0 / div[j];
        const double* grow = gy + j * d;
        for (std::size_t b = 0; b < q; ++b) {
          const double w = A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) * inv;
          if (w == 0.0) continue;
          double* xrow = gx + b * d;
          for (std::size_t i = 0; i < d; ++i) xrow[i] += w * grow[i];
        }
      }
    });
  }
  return result;
}

Tensor gather_weighted(Tape& tape, const Tensor& x, std::span<const std::size_t> index,
                       std::span<const double> weight, std::size_t k) {
  if (x.rank() != 2) throw Error("gather_weighted: expected [B, D], got " + shape_string(x.shape()));
  if (k < 1 || index.size() != weight.size() || index.size() % k != 0) {
    throw Error("gather_weighted: index/weight blocks are not A x k");
  }
  const std::size_t rows = index.size() / k, d = x.dim(1);
  for (auto i : index) {
    if (i >= x.dim(0)) throw Error("gather_weighted: index out of range");
  }
  std::vector<double> y(rows * d, 0.0);
  const double* xv = x.data().data();
  for (std::size_t a = 0; a < rows; ++a) {
    double* yrow = y.data() + a * d;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = weight[a * k + j];
      if (w == 0.0) continue;
      const double* xrow = xv + index[a * k + j] * d;
      for (std::size_t i = 0; i < d; ++i) yrow[i] += w * xrow[i];
    }
  }
  Tensor result = finish({rows, d}, std::move(y), x.requires_grad(), "gather_weighted");
  if (x.requires_grad()) {
    tape.record([xn = x.node_ptr(), yn = result.node_ptr(),
                 idx = std::vector<std::size_t>(index.begin(), index.end()),
                 wt = std::vector<double>(weight.begin(), weight.end()), rows, k, d] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gx = grad_of(xn);
      for (std::size_t a = 0; a < rows; ++a) {
        for (std::size_t j = 0; j < k; ++j) {
          const double w = wt[a * k + j];
          if (w == 0.0) continue;
          double* xrow = gx + idx[a * k + j] * d;
          for (std::size_t i = 0; i < d; ++i) xrow[i] += w * gy[a * d + i];
        }
      }
    });
  }
  return result;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::span<const int> targets) {
  if (logits.rank() != 2) throw Error("softmax_cross_entropy: expected [B, C] logits");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (batch == 0 || targets.size() != batch) throw Error("softmax_cross_entropy: target count mismatch");
  std::vector<double> probs(batch * classes);
  double loss = 0.0;
  const double* lv = logits.data().data();
  for (std::size_t r = 0; r < batch; ++r) {
    const int t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= classes) {
      throw Error("softmax_cross_entropy: target " + std::to_string(t) + " outside [0, " +
                  std::to_string(classes) + ")");
    }
    const double* row = lv + r * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[r * classes + c] = std::exp(row[c] - mx);
      z += probs[r * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] /= z;
    loss += -(row[t] - mx - std::log(z));
  }
  loss /= static_cast<double>(batch);
  Tensor result = finish({1}, {loss}, logits.requires_grad(), "softmax_cross_entropy");
  if (logits.requires_grad()) {
    tape.record([ln = logits.node_ptr(), yn = result.node_ptr(), probs = std::move(probs),
                 tg = std::vector<int>(targets.begin(), targets.end()), batch, classes] {
      const double* gy = upstream(yn);
      if (!gy) return;
      double* gl = grad_of(ln);
      const double f = gy[0] / static_cast<double>(batch);
      for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t c = 0; c < classes; ++c) {
          const double onehot = static_cast<int>(c) == tg[r] ? 1.0 : 0.0;
          gl[r * classes + c] += f * (probs[r * classes + c] - onehot);
        }
      }
    });
  }
  return result;
}

}  // namespace lrcnet
