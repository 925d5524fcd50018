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


#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "lrcnet/error.hpp"
#include "lrcnet/geometry.hpp"
#include "lrcnet/rng.hpp"

using namespace lrcnet;

namespace {

std::vector<Point3> random_points(std::size_t n, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<Point3> pts(n);
  for (auto& p : pts) p = {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
  return pts;
}

std::vector<Point3> translated(std::vector<Point3> pts, const Point3& t) {
  for (auto& p : pts) {
    for (int d = 0; d < 3; ++d) p[d] += t[d];
  }
  return pts;
}

double sq(const Point3& a, const Point3& b) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// Full sort of every point by (distance, index).
std::vector<std::size_t> knn_oracle(const std::vector<Point3>& pts, std::size_t q, std::size_t k) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = sq(pts[a], pts[q]), db = sq(pts[b], pts[q]);
    return da < db || (da == db && a < b);
  });
  order.resize(std::min(k, pts.size()));
  while (order.size() < k) order.push_back(order.back());
  return order;
}

double min_dist_to(const std::vector<Point3>& pts, std::size_t q, std::span<const std::size_t> set) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s : set) best = std::min(best, sq(pts[q], pts[s]));
  return best;
}

}  // namespace

TEST_CASE("squared_distance") {
  CHECK(squared_distance({0, 0, 0}, {3, 4, 0}) == 25.0);
  CHECK(squared_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
}

TEST_CASE("farthest_point_sampling on a line follows the tie rule") {
  const std::vector<Point3> pts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  CHECK(farthest_point_sampling(pts, 3, 0) == std::vector<std::size_t>{0, 3, 1});
  CHECK(farthest_point_sampling(pts, 1, 2) == std::vector<std::size_t>{2});
}

TEST_CASE("farthest_point_sampling with m = N is a permutation") {
  CounterRng rng(5);
  const auto pts = random_points(40, rng);
  auto idx = farthest_point_sampling(pts, 40, 7);
  CHECK(idx.front() == 7);
  std::sort(idx.begin(), idx.end());
  std::vector<std::size_t> all(40);
  std::iota(all.begin(), all.end(), std::size_t{0});
  CHECK(idx == all);
}

TEST_CASE("farthest_point_sampling handles duplicate points") {
  const std::vector<Point3> pts = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
  auto idx = farthest_point_sampling(pts, 4, 0);
  CHECK(idx == std::vector<std::size_t>{0, 3, 1, 2});
  CHECK_THROWS_AS(farthest_point_sampling(pts, 5, 0), Error);
  CHECK_THROWS_AS(farthest_point_sampling(pts, 2, 4), Error);
}

TEST_CASE("farthest_point_sampling maximality holds exhaustively") {
  CounterRng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(63);
    const std::size_t m = 1 + rng.below(n);
    const auto pts = random_points(n, rng);
    const auto idx = farthest_point_sampling(pts, m, rng.below(n));
    for (std::size_t i = 1; i < m; ++i) {
      const std::span<const std::size_t> chosen(idx.data(), i);
      const double picked = min_dist_to(pts, idx[i], chosen);
      for (std::size_t q = 0; q < n; ++q) {
        if (std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(i + 1), q) !=
            idx.begin() + static_cast<std::ptrdiff_t>(i + 1)) {
          continue;
        }
        CHECK(picked >= min_dist_to(pts, q, chosen));
      }
    }
  }
}

TEST_CASE("knn_indices examples") {
  const std::vector<Point3> line = {{0, 0, 0}, {1, 0, 0}, {3, 0, 0}, {7, 0, 0}};
  const std::vector<std::size_t> q0 = {0};
  CHECK(knn_indices(line, q0, 1) == std::vector<std::size_t>{0});
  CHECK(knn_indices(line, q0, 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(knn_indices(line, q0, 6) == std::vector<std::size_t>{0, 1, 2, 3, 3, 3});
  const std::vector<std::size_t> q2 = {2};
  // x=3: distances 9, 4, 0, 16.
  CHECK(knn_indices(line, q2, 4) == std::vector<std::size_t>{2, 1, 0, 3});
}

TEST_CASE("knn_indices matches a full sort") {
  CounterRng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + rng.below(60);
    // Coarse grid values force exact distance ties.
    std::vector<Point3> pts(n);
    for (auto& p : pts) {
      p = {static_cast<double>(rng.below(4)), static_cast<double>(rng.below(4)), static_cast<double>(rng.below(4))};
    }
    std::vector<std::size_t> query = {0, n / 2, n - 1};
    const std::size_t k = 1 + rng.below(n + 3);
    const auto got = knn_indices(pts, query, k);
    for (std::size_t r = 0; r < query.size(); ++r) {
      const auto want = knn_oracle(pts, query[r], k);
      CHECK(std::vector<std::size_t>(got.begin() + static_cast<std::ptrdiff_t>(r * k),
                                     got.begin() + static_cast<std::ptrdiff_t>((r + 1) * k)) == want);
    }
  }
}

TEST_CASE("group_areas") {
  CounterRng rng(3);
  const auto pts = random_points(6, rng);
  const std::vector<std::size_t> centroids = {0, 3};

  const std::vector<std::size_t> one = {1};
  const RegionIndex r1 = group_areas(pts, centroids, one);
  CHECK(r1.area(0, 0)[0] == 0);
  CHECK(r1.area(1, 0)[0] == 3);

  const std::vector<std::size_t> scales = {2, 4};
  const RegionIndex r = group_areas(pts, centroids, scales);
  CHECK_NOTHROW(r.validate(pts.size()));
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const auto small = r.area(j, 0), big = r.area(j, 1);
    const auto oracle = knn_oracle(pts, centroids[j], 4);
    CHECK(std::vector<std::size_t>(big.begin(), big.end()) == oracle);
    for (std::size_t s : small) CHECK(std::find(big.begin(), big.end(), s) != big.end());
  }

  const std::vector<std::size_t> dup = {1, 1};
  CHECK_THROWS_AS(group_areas(pts, dup, scales), Error);
  const std::vector<std::size_t> unsorted = {4, 2};
  CHECK_THROWS_AS(group_areas(pts, centroids, unsorted), Error);
  RegionIndex bad = r;
  bad.centroid_idx[1] = bad.centroid_idx[0];
  CHECK_THROWS_AS(bad.validate(pts.size()), Error);
}

TEST_CASE("group_areas pads when K exceeds N") {
  const std::vector<Point3> pts = {{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
  const std::vector<std::size_t> c = {0};
  const std::vector<std::size_t> scales = {2, 5};
  const RegionIndex r = group_areas(pts, c, scales);
  const auto big = r.area(0, 1);
  CHECK(std::vector<std::size_t>(big.begin(), big.end()) == std::vector<std::size_t>{0, 1, 2, 2, 2});
}

TEST_CASE("to_relative") {
  const std::vector<Point3> pts = {{1, 0, 0}, {2, 2, 0}, {5, 5, 5}};
  const std::vector<std::size_t> c = {0};
  const std::vector<std::size_t> scales = {1, 2};
  const RegionIndex r = group_areas(pts, c, scales);
  const auto rel = to_relative(pts, r);
  REQUIRE(rel.size() == 2);
  CHECK(rel[0] == std::vector<double>{0, 0, 0});
  CHECK(rel[1] == std::vector<double>{0, 0, 0, 1, 2, 0});

  CounterRng rng(13);
  const auto cloud = random_points(30, rng);
  const std::vector<std::size_t> cs = {0, 7, 19};
  const std::vector<std::size_t> ks = {4, 8};
  const RegionIndex ri = group_areas(cloud, cs, ks);
  const auto moved = translated(cloud, {5, -2, 7});
  // Translation by small integers is exact for these magnitudes only when the
  // sums round identically; compare against the same indices.
  const auto a = to_relative(cloud, ri);
  const auto b = to_relative(moved, ri);
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t i = 0; i < a[t].size(); ++i) CHECK(std::abs(a[t][i] - b[t][i]) <= 1e-14);
  }
  const std::vector<Point3> grid = {{0.5, 0.25, 1}, {1.5, -0.75, 2}, {3, 3, 3}};
  const auto g0 = to_relative(grid, group_areas(grid, c, scales));
  const auto g1 = to_relative(translated(grid, {5, -2, 7}), group_areas(grid, c, scales));
  CHECK(g0 == g1);
}

TEST_CASE("pairwise_sqdist") {
  const std::vector<Point3> two = {{0, 0, 0}, {1, 0, 0}};
  const RowMatrix U = pairwise_sqdist(two);
  CHECK(U(0, 0) == 0.0);
  CHECK(U(0, 1) == 1.0);
  CHECK(U(1, 0) == 1.0);
  const std::vector<Point3> tri = {{0, 0, 0}, {3, 4, 0}};
  CHECK(pairwise_sqdist(tri)(0, 1) == 25.0);

  CounterRng rng(4);
  const auto pts = random_points(17, rng);
  const RowMatrix R = pairwise_sqdist(pts);
  for (Eigen::Index a = 0; a < R.rows(); ++a) {
    CHECK(R(a, a) == 0.0);
    for (Eigen::Index b = 0; b < R.cols(); ++b) CHECK(R(a, b) == R(b, a));
  }
}

TEST_CASE("similarity_matrix") {
  RowMatrix U(2, 2);
  U << 0, 1, 1, 0;
  const auto s0 = similarity_matrix(U, 0.0);
  CHECK((s0.V.array() == 1.0).all());
  const auto s1 = similarity_matrix(U, 1.0);
  CHECK(s1.V(0, 1) == std::exp(-1.0));
  CHECK(s1.V(0, 0) == 1.0);
  CHECK_THROWS_AS(similarity_matrix(U, -1.0), Error);

  CounterRng rng(6);
  const auto pts = random_points(20, rng);
  RowMatrix far = pairwise_sqdist(pts);
  double min_off = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < far.rows(); ++a) {
    for (Eigen::Index b = 0; b < far.cols(); ++b) {
      if (a != b) min_off = std::min(min_off, far(a, b));
    }
  }
  REQUIRE(min_off >= 1e-6);
  const auto big = similarity_matrix(far, 1e12);
  for (Eigen::Index a = 0; a < far.rows(); ++a) {
    double row = 0.0;
    for (Eigen::Index b = 0; b < far.cols(); ++b) {
      row += big.V(a, b);
      if (a == b) {
        CHECK(big.V(a, b) == 1.0);
      } else {
        CHECK(big.V(a, b) < 1e-300);
      }
    }
    CHECK(row >= 1.0);
  }
}

TEST_CASE("geometry is invariant under translation") {
  CounterRng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = random_points(48, rng);
    const auto moved = translated(pts, {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)});
    const auto fa = farthest_point_sampling(pts, 12, 0);
    CHECK(fa == farthest_point_sampling(moved, 12, 0));
    CHECK(knn_indices(pts, fa, 9) == knn_indices(moved, fa, 9));
    const RowMatrix ua = pairwise_sqdist(gather_points(pts, fa));
    const RowMatrix ub = pairwise_sqdist(gather_points(moved, fa));
    CHECK((ua - ub).cwiseAbs().maxCoeff() <= 1e-12);
    const auto va = similarity_matrix(ua, 10.0), vb = similarity_matrix(ub, 10.0);
    CHECK((va.V - vb.V).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("interp_weights") {
  const std::vector<Point3> sources = {{1, 0, 0}, {2, 0, 0}};
  const std::vector<Point3> origin = {{0, 0, 0}};
  const auto w = interp_weights(origin, sources, 2);
  REQUIRE(w.k == 2);
  CHECK(w.index == std::vector<std::size_t>{0, 1});
  CHECK(std::abs(w.weight[0] - 0.8) <= 1e-12);
  CHECK(std::abs(w.weight[1] - 0.2) <= 1e-12);

  const std::vector<Point3> on_source = {{2, 0, 0}};
  const auto c = interp_weights(on_source, sources, 2);
  CHECK(c.index[0] == 1);
  CHECK(c.weight[0] == 1.0);
  CHECK(c.weight[1] == 0.0);

  const std::vector<Point3> tri = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {5, 5, 5}};
  const auto e = interp_weights(origin, tri, 3);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(e.weight[static_cast<std::size_t>(i)] - 1.0 / 3.0) <= 1e-15);

  const auto padded = interp_weights(origin, sources, 4);
  CHECK(padded.index == std::vector<std::size_t>{0, 1, 1, 1});
  CHECK(padded.weight[2] == 0.0);
  CHECK(padded.weight[3] == 0.0);

  CounterRng rng(77);
  const auto targets = random_points(50, rng);
  const auto srcs = random_points(10, rng);
  const auto r = interp_weights(targets, srcs, 3);
  for (std::size_t a = 0; a < targets.size(); ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(r.weight[a * 3 + i] >= 0.0);
      s += r.weight[a * 3 + i];
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("gather_points") {
  const std::vector<Point3> pts = {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
  const std::vector<std::size_t> idx = {2, 0};
  CHECK(gather_points(pts, idx) == std::vector<Point3>{{2, 2, 2}, {0, 0, 0}});
}
