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
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lrcnet/dataio.hpp"

namespace lrcnet {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sampled centroids plus, for every scale t, the K_t nearest neighbors of
/// every centroid. neighbors[t] is a flat M x K_t row-major index block.
struct RegionIndex {
  std::vector<std::size_t> centroid_idx;
  std::vector<std::size_t> scales;
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t num_regions() const { return centroid_idx.size(); }
  std::size_t num_scales() const { return scales.size(); }
  std::span<const std::size_t> area(std::size_t region, std::size_t scale) const {
    const std::size_t k = scales[scale];
    return {neighbors[scale].data() + region * k, k};
  }

  /// Throws unless every invariant holds for a cloud of n points.
  void validate(std::size_t n) const;
};

/// Squared centroid distances U and Gaussian similarities V = exp(-gamma U).
struct SimilarityMatrix {
  RowMatrix U;
  RowMatrix V;
  double gamma = 0.0;
};

double squared_distance(const Point3& a, const Point3& b);

/// Greedy farthest point sampling. result[0] = start; every later pick
/// maximizes the minimum squared distance to the picks so far, ties going to
/// the smallest index. Already-picked indices are never chosen again.
std::vector<std::size_t> farthest_point_sampling(std::span<const Point3> points, std::size_t m,
                                                 std::size_t start = 0);

/// Brute-force kNN. Row q holds the k indices nearest to points[query[q]],
/// ascending by (squared distance, index). When k exceeds the cloud size the
/// last true neighbor is repeated to fill the row.
std::vector<std::size_t> knn_indices(std::span<const Point3> points,
                                     std::span<const std::size_t> query, std::size_t k);

/// Multi-scale grouping; scales must be strictly increasing.
RegionIndex group_areas(std::span<const Point3> points, std::span<const std::size_t> centroid_idx,
                        std::span<const std::size_t> scales);

/// For each scale t a flat M x K_t x 3 block of neighbor coordinates expressed
/// relative to their region's centroid.
std::vector<std::vector<double>> to_relative(std::span<const Point3> points,
                                             const RegionIndex& region);

/// U[a][b] = |p_a - p_b|^2, evaluated from coordinate differences so the
/// result is symmetric with an exactly zero diagonal.
RowMatrix pairwise_sqdist(std::span<const Point3> points);

/// V = exp(-gamma U) elementwise; entries where U is zero are exactly 1 so an
/// infinite gamma gives the identity.
SimilarityMatrix similarity_matrix(const RowMatrix& U, double gamma);

/// Inverse-squared-distance interpolation weights. Flat A x k blocks.
struct InterpWeights {
  std::size_t k = 0;
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

inline constexpr double kInterpEps = 1e-10;

/// For each target, its k nearest sources weighted by 1/d^2 and normalized to
/// sum to one. A source closer than eps (squared) takes weight 1 alone. When k
/// exceeds the source count the row is padded with the last neighbor at
/// weight 0.
InterpWeights interp_weights(std::span<const Point3> targets, std::span<const Point3> sources,
                             std::size_t k = 3, double eps = kInterpEps);

std::vector<Point3> gather_points(std::span<const Point3> points, std::span<const std::size_t> idx);

}  // namespace lrcnet
