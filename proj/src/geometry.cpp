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

#include "lrcnet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lrcnet/error.hpp"

namespace lrcnet {

namespace {

/// Sorts candidate indices by (distance, index) and keeps the first k.
std::vector<std::size_t> nearest(std::span<const double> dist, std::size_t k) {
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t keep = std::min(k, order.size());
  auto less = [&](std::size_t a, std::size_t b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), less);
  order.resize(keep);
  return order;
}

}  // namespace

double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

void RegionIndex::validate(std::size_t n) const {
  if (scales.empty()) throw Error("region index has no scales");
  if (neighbors.size() != scales.size()) throw Error("region index scale count mismatch");
  for (std::size_t t = 1; t < scales.size(); ++t) {
    if (scales[t] <= scales[t - 1]) throw Error("scales must be strictly increasing");
  }
  std::vector<char> used(n, 0);
  for (auto c : centroid_idx) {
    if (c >= n) throw Error("centroid index out of range");
    if (used[c]) throw Error("duplicate centroid index " + std::to_string(c));
    used[c] = 1;
  }
  for (std::size_t t = 0; t < scales.size(); ++t) {
    if (neighbors[t].size() != centroid_idx.size() * scales[t]) {
      throw Error("scale " + std::to_string(t) + " has the wrong neighbor count");
    }
    for (auto i : neighbors[t]) {
      if (i >= n) throw Error("neighbor index out of range");
    }
  }
}

std::vector<std::size_t> farthest_point_sampling(std::span<const Point3> points, std::size_t m,
                                                 std::size_t start) {
  const std::size_t n = points.size();
  if (m < 1 || m > n) {
    throw Error("farthest_point_sampling: need 1 <= m <= N (m=" + std::to_string(m) +
                ", N=" + std::to_string(n) + ")");
  }
  if (start >= n) throw Error("farthest_point_sampling: start index out of range");

  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<char> picked(n, 0);
  std::vector<std::size_t> result;
  result.reserve(m);
  result.push_back(start);
  picked[start] = 1;
  std::size_t last = start;
  while (result.size() < m) {
    std::size_t best = n;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (picked[i]) continue;
      min_dist[i] = std::min(min_dist[i], squared_distance(points[i], points[last]));
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    picked[best] = 1;
    result.push_back(best);
    last = best;
  }
  return result;
}

std::vector<std::size_t> knn_indices(std::span<const Point3> points,
                                     std::span<const std::size_t> query, std::size_t k) {
  if (points.empty()) throw Error("knn_indices: empty cloud");
  if (k < 1) throw Error("knn_indices: k must be >= 1");
  std::vector<std::size_t> out;
  out.reserve(query.size() * k);
  std::vector<double> dist(points.size());
  for (auto q : query) {
    if (q >= points.size()) throw Error("knn_indices: query index out of range");
    for (std::size_t i = 0; i < points.size(); ++i) dist[i] = squared_distance(points[i], points[q]);
    auto row = nearest(dist, k);
    const std::size_t last = row.back();
    row.resize(k, last);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

RegionIndex group_areas(std::span<const Point3> points, std::span<const std::size_t> centroid_idx,
                        std::span<const std::size_t> scales) {
  if (scales.empty()) throw Error("group_areas: no scales");
  RegionIndex region;
  region.centroid_idx.assign(centroid_idx.begin(), centroid_idx.end());
  region.scales.assign(scales.begin(), scales.end());
  for (std::size_t t = 0; t < scales.size(); ++t) {
    if (scales[t] < 1 || (t > 0 && scales[t] <= scales[t - 1])) {
      throw Error("group_areas: scales must be positive and strictly increasing");
    }
  }
  // The largest scale's sorted rows contain every smaller scale as a prefix.
  const std::size_t kmax = scales.back();
  const auto all = knn_indices(points, centroid_idx, kmax);
  const std::size_t m = centroid_idx.size();
  region.neighbors.resize(scales.size());
  for (std::size_t t = 0; t < scales.size(); ++t) {
    auto& block = region.neighbors[t];
    block.reserve(m * scales[t]);
    for (std::size_t j = 0; j < m; ++j) {
      const auto* row = all.data() + j * kmax;
      if (scales[t] <= points.size()) {
        block.insert(block.end(), row, row + scales[t]);
      } else {
        // Padding differs per k: repeat this scale's own last true neighbor.
        const std::size_t real = points.size();
        block.insert(block.end(), row, row + real);
        block.insert(block.end(), scales[t] - real, row[real - 1]);
      }
    }
  }
  region.validate(points.size());
  return region;
}

std::vector<std::vector<double>> to_relative(std::span<const Point3> points,
                                             const RegionIndex& region) {
  region.validate(points.size());
  std::vector<std::vector<double>> out(region.num_scales());
  for (std::size_t t = 0; t < region.num_scales(); ++t) {
    auto& block = out[t];
    block.reserve(region.neighbors[t].size() * 3);
    for (std::size_t j = 0; j < region.num_regions(); ++j) {
      const auto& c = points[region.centroid_idx[j]];
      for (auto i : region.area(j, t)) {
        const auto& p = points[i];
        block.push_back(p[0] - c[0]);
        block.push_back(p[1] - c[1]);
        block.push_back(p[2] - c[2]);
      }
    }
  }
  return out;
}

RowMatrix pairwise_sqdist(std::span<const Point3> points) {
  const auto m = static_cast<Eigen::Index>(points.size());
  RowMatrix U = RowMatrix::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) {
      const double d = squared_distance(points[a], points[b]);
      U(a, b) = d;
      U(b, a) = d;
    }
  }
  return U;
}

SimilarityMatrix similarity_matrix(const RowMatrix& U, double gamma) {
  if (!(gamma >= 0.0)) throw Error("similarity_matrix: gamma must be >= 0");
  if (U.rows() != U.cols()) throw Error("similarity_matrix: U must be square");
  SimilarityMatrix s;
  s.U = U;
  s.gamma = gamma;
  s.V.resize(U.rows(), U.cols());
  for (Eigen::Index a = 0; a < U.rows(); ++a) {
    for (Eigen::Index b = 0; b < U.cols(); ++b) {
      const double u = U(a, b);
      if (u < 0.0) throw Error("similarity_matrix: negative squared distance");
      s.V(a, b) = u == 0.0 ? 1.0 : std::exp(-gamma * u);
    }
  }
  return s;
}

InterpWeights interp_weights(std::span<const Point3> targets, std::span<const Point3> sources,
                             std::size_t k, double eps) {
  if (sources.empty()) throw Error("interp_weights: empty sources");
  if (k < 1) throw Error("interp_weights: k must be >= 1");
  if (!(eps > 0.0)) throw Error("interp_weights: eps must be > 0");
  InterpWeights w;
  w.k = k;
  w.index.reserve(targets.size() * k);
  w.weight.reserve(targets.size() * k);
  std::vector<double> dist(sources.size());
  for (const auto& p : targets) {
    for (std::size_t i = 0; i < sources.size(); ++i) dist[i] = squared_distance(p, sources[i]);
    const auto row = nearest(dist, k);
    std::vector<double> wt(row.size(), 0.0);
    if (dist[row.front()] < eps) {
      wt.front() = 1.0;
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < row.size(); ++i) {
        wt[i] = 1.0 / dist[row[i]];
        total += wt[i];
      }
      for (double& x : wt) x /= total;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const bool real = i < row.size();
      w.index.push_back(real ? row[i] : row.back());
      w.weight.push_back(real ? wt[i] : 0.0);
    }
  }
  return w;
}

std::vector<Point3> gather_points(std::span<const Point3> points, std::span<const std::size_t> idx) {
  std::vector<Point3> out;
  out.reserve(idx.size());
  for (auto i : idx) {
    if (i >= points.size()) throw Error("gather_points: index out of range");
    out.push_back(points[i]);
  }
  return out;
}

}  // namespace lrcnet
