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
#include <optional>
#include <span>
#include <vector>

#include "lrcnet/autodiff.hpp"
#include "lrcnet/geometry.hpp"

namespace lrcnet {

struct DenseParams {
  Tensor W;  // [in, out]
  Tensor b;  // [out]
};

/// Shared per-point MLP; every layer is followed by ReLU.
struct PointNetLayerParams {
  std::vector<DenseParams> mlp;
  std::size_t out_dim() const { return mlp.back().W.dim(1); }
};

/// One filter bank per window size: banks[h - 1].W is [h * D, F_h].
struct IntraConvParams {
  std::vector<DenseParams> banks;
};

/// Filters per window size when D outputs are split over `kinds` window
/// sizes: D / kinds each, with the remainder added to window size 1.
std::vector<std::size_t> filters_per_kind(std::size_t region_dim, std::size_t kinds);

enum class Aggregation { kIntraConv, kMean, kMax, kConcat };
enum class GlobalPool { kMax, kMean, kSum };

/// Applies the MLP over the last axis. relu_last = false leaves the final
/// layer linear (used for logits).
Tensor mlp_forward(Tape& tape, const Tensor& x, std::span<const DenseParams> layers, bool relu_last = true);

/// [G, K, C] -> [G, out]: shared MLP then max over the K points.
Tensor pointnet_layer(Tape& tape, const Tensor& points, const PointNetLayerParams& params);

/// [M, T, D] -> [M, D]. Each filter slides over every window of h adjacent
/// scale features, applies bias and ReLU, and keeps the maximum response.
/// Outputs are ordered by window size, then filter index.
Tensor intra_region_encode(Tape& tape, const Tensor& area_feats, const IntraConvParams& params);

/// [M, D] -> [M, D]: r''_j = sum_b V[j][b] r_b / sum_b V[j][b]. V is constant.
Tensor inter_region_encode(Tape& tape, const Tensor& region_feats, const SimilarityMatrix& sim);

/// Ablation aggregations over the scale axis: [M, T, D] -> [M, D], or
/// [M, T * D] for concat.
Tensor aggregate_fallback(Tape& tape, const Tensor& area_feats, Aggregation mode);

/// [M, D] -> [out]: shared MLP then pooling over the M regions.
Tensor global_pointnet(Tape& tape, const Tensor& enhanced, const PointNetLayerParams& params,
                       GlobalPool pool = GlobalPool::kMax);

/// Interpolates [B, D] source features onto the targets with k = 3
/// inverse-squared-distance weights and appends optional skip features.
Tensor feature_propagation(Tape& tape, std::span<const Point3> targets, std::span<const Point3> sources,
                           const Tensor& source_feats, const std::optional<Tensor>& skip_feats,
                           std::size_t k = 3);

/// FC layers with ReLU between; dropout after each hidden layer when an RNG
/// is supplied (training mode). g is [F] or [1, F]; result is [1, C].
Tensor classification_head(Tape& tape, const Tensor& g, std::span<const DenseParams> layers,
                           double dropout_rate, CounterRng* train_rng);

}  // namespace lrcnet
