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

#include "lrcnet/layers.hpp"

#include <string>

#include "lrcnet/error.hpp"

namespace lrcnet {

std::vector<std::size_t> filters_per_kind(std::size_t region_dim, std::size_t kinds) {
  if (kinds < 1) throw Error("filter kinds must be >= 1");
  std::vector<std::size_t> counts(kinds, region_dim / kinds);
  counts[0] += region_dim % kinds;
  return counts;
}

Tensor mlp_forward(Tape& tape, const Tensor& x, std::span<const DenseParams> layers, bool relu_last) {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = linear(tape, h, layers[i].W, layers[i].b);
    if (relu_last || i + 1 < layers.size()) h = relu(tape, h);
  }
  return h;
}

Tensor pointnet_layer(Tape& tape, const Tensor& points, const PointNetLayerParams& params) {
  if (points.rank() != 3 || points.dim(1) < 1) {
    throw Error("pointnet_layer: expected [G, K, C] with K >= 1, got " + shape_string(points.shape()));
  }
  if (params.mlp.empty() || params.mlp.front().W.dim(0) != points.dim(2)) {
    throw Error("pointnet_layer: input width " + std::to_string(points.dim(2)) + " does not match params");
  }
  return max_reduce(tape, mlp_forward(tape, points, params.mlp), 1);
}

Tensor intra_region_encode(Tape& tape, const Tensor& area_feats, const IntraConvParams& params) {
  if (area_feats.rank() != 3) {
    throw Error("intra_region_encode: expected [M, T, D], got " + shape_string(area_feats.shape()));
  }
  const std::size_t scales = area_feats.dim(1), width = area_feats.dim(2);
  if (params.banks.empty()) throw Error("intra_region_encode: no filter banks");
  if (params.banks.size() > scales) {
    throw Error("intra_region_encode: window size " + std::to_string(params.banks.size()) +
                " exceeds scale count " + std::to_string(scales));
  }
  std::vector<Tensor> parts;
  parts.reserve(params.banks.size());
  for (std::size_t k = 0; k < params.banks.size(); ++k) {
    const std::size_t h = k + 1;
    const auto& bank = params.banks[k];
    if (bank.W.dim(0) != h * width) throw Error("intra_region_encode: filter shape mismatch");
    Tensor windows = unfold_windows(tape, area_feats, h);
    Tensor responses = relu(tape, linear(tape, windows, bank.W, bank.b));
    parts.push_back(max_reduce(tape, responses, 1));
  }
  return parts.size() == 1 ? parts.front() : concat(tape, parts, 1);
}

Tensor inter_region_encode(Tape& tape, const Tensor& region_feats, const SimilarityMatrix& sim) {
  if (region_feats.rank() != 2 || static_cast<std::size_t>(sim.V.rows()) != region_feats.dim(0) ||
      sim.V.rows() != sim.V.cols()) {
    throw Error("inter_region_encode: similarity is " + std::to_string(sim.V.rows()) + "x" +
                std::to_string(sim.V.cols()) + " but features are " + shape_string(region_feats.shape()));
  }
  std::vector<double> row_sums(static_cast<std::size_t>(sim.V.rows()), 0.0);
  for (Eigen::Index j = 0; j < sim.V.rows(); ++j) {
    for (Eigen::Index b = 0; b < sim.V.cols(); ++b) row_sums[static_cast<std::size_t>(j)] += sim.V(j, b);
  }
  return mix_rows(tape, sim.V, region_feats, row_sums);
}

Tensor aggregate_fallback(Tape& tape, const Tensor& area_feats, Aggregation mode) {
  if (area_feats.rank() != 3) {
    throw Error("aggregate_fallback: expected [M, T, D], got " + shape_string(area_feats.shape()));
  }
  switch (mode) {
    case Aggregation::kMean: return mean_reduce(tape, area_feats, 1);
    case Aggregation::kMax: return max_reduce(tape, area_feats, 1);
    case Aggregation::kConcat:
      return reshape(tape, area_feats, {area_feats.dim(0), area_feats.dim(1) * area_feats.dim(2)});
    case Aggregation::kIntraConv: break;
  }
  throw Error("aggregate_fallback: intra-conv is not a fallback mode");
}

Tensor global_pointnet(Tape& tape, const Tensor& enhanced, const PointNetLayerParams& params, GlobalPool pool) {
  if (enhanced.rank() != 2 || enhanced.dim(0) < 1) {
    throw Error("global_pointnet: expected [M, D] with M >= 1, got " + shape_string(enhanced.shape()));
  }
  Tensor h = mlp_forward(tape, enhanced, params.mlp);
  switch (pool) {
    case GlobalPool::kMax: return max_reduce(tape, h, 0);
    case GlobalPool::kMean: return mean_reduce(tape, h, 0);
    case GlobalPool::kSum: return sum_reduce(tape, h, 0);
  }
  throw Error("global_pointnet: unknown pool");
}

Tensor feature_propagation(Tape& tape, std::span<const Point3> targets, std::span<const Point3> sources,
                           const Tensor& source_feats, const std::optional<Tensor>& skip_feats,
                           std::size_t k) {
  if (sources.empty()) throw Error("feature_propagation: empty sources");
  if (source_feats.rank() != 2 || source_feats.dim(0) != sources.size()) {
    throw Error("feature_propagation: source features " + shape_string(source_feats.shape()) +
                " do not match " + std::to_string(sources.size()) + " sources");
  }
  const auto w = interp_weights(targets, sources, k);
  Tensor interpolated = gather_weighted(tape, source_feats, w.index, w.weight, w.k);
  if (!skip_feats) return interpolated;
  if (skip_feats->rank() != 2 || skip_feats->dim(0) != targets.size()) {
    throw Error("feature_propagation: skip features do not match targets");
  }
  const Tensor both[] = {interpolated, *skip_feats};
  return concat(tape, both, 1);
}

Tensor classification_head(Tape& tape, const Tensor& g, std::span<const DenseParams> layers,
                           double dropout_rate, CounterRng* train_rng) {
  if (layers.empty()) throw Error("classification_head: no layers");
  Tensor h = g.rank() == 1 ? reshape(tape, g, {1, g.dim(0)}) : g;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = linear(tape, h, layers[i].W, layers[i].b);
    if (i + 1 < layers.size()) {
      h = relu(tape, h);
      if (train_rng) h = dropout(tape, h, dropout_rate, *train_rng);
    }
  }
  return h;
}

}  // namespace lrcnet
