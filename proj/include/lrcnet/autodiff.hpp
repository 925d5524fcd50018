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

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lrcnet/geometry.hpp"
#include "lrcnet/rng.hpp"

namespace lrcnet {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {
struct TensorNode {
  Shape shape;
  std::shared_ptr<std::vector<double>> value;
  std::vector<double> grad;
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value->size()) grad.assign(value->size(), 0.0);
  }
};
}  // namespace detail

/// Dense row-major tensor handle. Copies share the underlying node; values
/// produced by an op are never mutated afterwards.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  /// Leaf sharing external storage, used to expose parameters to a tape
  /// without copying. The storage must outlive every op that reads it.
  static Tensor wrap(Shape shape, std::shared_ptr<std::vector<double>> storage,
                     bool requires_grad);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value->size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> data() const { return *node_->value; }
  /// Gradient accumulated by Tape::backward. Zero-filled for leaves that
  /// require grad but were not reached; empty otherwise.
  std::span<const double> grad() const { return node_->grad; }
  double item() const;

  detail::TensorNode& node() const { return *node_; }
  const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor make_result(Shape shape, std::vector<double> values, bool requires_grad);
};

/// Internal: builds an op result node.
Tensor make_result(Shape shape, std::vector<double> values, bool requires_grad);

/// Records backward closures in execution order and replays them in exact
/// reverse. One tape per forward pass; a tape can be consumed only once.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::function<void()> backward_fn);
  /// Seeds d(loss)/d(loss) = 1 and propagates. loss must be a single element.
  void backward(const Tensor& loss);

  bool consumed() const { return consumed_; }
  std::size_t size() const { return ops_.size(); }

  /// When enabled, relu and max_reduce fold their discrete decisions (active
  /// mask, winning index) into branch_signature(). Two forward passes with
  /// equal signatures evaluate the same smooth piece of the network.
  void set_track_branches(bool on) { track_branches_ = on; }
  bool track_branches() const { return track_branches_; }
  void note_branch(std::uint64_t value);
  std::uint64_t branch_signature() const { return signature_; }

 private:
  std::vector<std::function<void()>> ops_;
  bool consumed_ = false;
  bool track_branches_ = false;
  std::uint64_t signature_ = 0;
};

// Primitives. Each records onto the tape only when an input requires grad.
// Every forward output is checked for NaN/Inf and raises NumericError.

/// y = x W + b over the last axis of x. b may be undefined (no bias).
Tensor linear(Tape& tape, const Tensor& x, const Tensor& W, const Tensor& b);
Tensor relu(Tape& tape, const Tensor& x);
/// Maximum over `axis`; backward routes to the first maximal element.
Tensor max_reduce(Tape& tape, const Tensor& x, std::size_t axis);
Tensor mean_reduce(Tape& tape, const Tensor& x, std::size_t axis);
Tensor sum_reduce(Tape& tape, const Tensor& x, std::size_t axis);
/// Sum of every element, as a shape-{1} tensor.
Tensor sum_all(Tape& tape, const Tensor& x);
Tensor concat(Tape& tape, std::span<const Tensor> xs, std::size_t axis);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);
Tensor scale(Tape& tape, const Tensor& x, double factor);
/// Inverted dropout: kept entries are multiplied by 1 / (1 - rate).
Tensor dropout(Tape& tape, const Tensor& x, double rate, CounterRng& rng);
/// [M, T, D] -> [M, T - h + 1, h * D]; window a holds scales a .. a + h - 1.
Tensor unfold_windows(Tape& tape, const Tensor& x, std::size_t h);
/// [1, D] or [D] -> [n, D].
Tensor broadcast_rows(Tape& tape, const Tensor& x, std::size_t n);
/// y_j = (sum_b A[j][b] x_b) / divisor_j with b ascending. A is a constant;
/// an empty divisor means 1.
Tensor mix_rows(Tape& tape, const RowMatrix& A, const Tensor& x, std::span<const double> divisor = {});
/// y_a = sum_i weight[a*k+i] * x[index[a*k+i]] for x of shape [B, D].
Tensor gather_weighted(Tape& tape, const Tensor& x, std::span<const std::size_t> index,
                       std::span<const double> weight, std::size_t k);
/// Mean over rows of -log softmax(logits)[target], max-subtracted.
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::span<const int> targets);

}  // namespace lrcnet
