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

#include <cmath>

#include "lrcnet/checkpoint.hpp"
#include "lrcnet/error.hpp"
#include "lrcnet/model.hpp"
#include "lrcnet/optimizer.hpp"
#include "test_util.hpp"

using namespace lrcnet;
using lrcnet::testing::read_file;
using lrcnet::testing::scratch_dir;

namespace {

PointCloud tiny_cloud(ShapeKind kind, std::uint64_t seed, std::size_t n = 64) {
  PointCloud c = normalize_cloud(gen_synthetic(kind, n, 0.01, seed));
  return c;
}

PointCloud shifted(PointCloud c, const Point3& t) {
  for (auto& p : c.coords) {
    for (int d = 0; d < 3; ++d) p[d] += t[d];
  }
  return c;
}

double max_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST_CASE("tiny config") {
  const ModelConfig c = tiny_config();
  CHECK(c.num_centroids == 8);
  CHECK(c.scales == std::vector<std::size_t>{4, 8});
  CHECK(c.region_dim == 8);
  CHECK(c.num_classes == 4);
  CHECK(c.precision == "f64");
  const ModelConfig p = full_scale_config();
  CHECK(p.num_centroids == 384);
  CHECK(p.scales == std::vector<std::size_t>{16, 32, 64, 128});
  CHECK(p.region_dim == 128);
  CHECK(p.dropout == 0.4);
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("config validation") {
  ModelConfig c = tiny_config();
  c.scales = {8, 4};
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny_config();
  c.filter_kinds = 3;
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny_config();
  c.gamma = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny_config();
  c.precision = "f32";
  CHECK_THROWS_AS(c.validate(), Error);
  c = tiny_config();
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("layout names and init") {
  const ModelConfig c = tiny_config();
  const Model m(c, 3);
  const auto layout = Model::layout(c);
  REQUIRE(layout.size() == m.params().size());
  CHECK(m.params().at(0).name == "area.s0.l0.W");
  CHECK(m.params().find("intra.h2.W").shape == Shape{16, 4});
  CHECK(m.params().find("head.l2.b").shape == Shape{4});
  CHECK_THROWS_AS(m.params().find("nope"), Error);
  for (const auto& p : m.params().all()) {
    if (p.shape.size() == 1) {
      for (double v : *p.value) CHECK(v == 0.0);
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(p.shape[0]));
      for (double v : *p.value) CHECK(std::abs(v) <= bound);
    }
  }
  const Model same(c, 3), other(c, 4);
  CHECK(*same.params().at(0).value == *m.params().at(0).value);
  CHECK(*other.params().at(0).value != *m.params().at(0).value);

  ModelConfig mean = c;
  mean.aggregation = Aggregation::kMean;
  for (const auto& [name, shape] : Model::layout(mean)) CHECK(name.rfind("intra", 0) != 0);
  ModelConfig seg = tiny_config(Task::kSegment);
  bool has_skip = false;
  for (const auto& [name, shape] : Model::layout(seg)) has_skip = has_skip || name == "skip.W";
  CHECK(has_skip);

  ParameterSet wrong = m.params().clone();
  wrong.add("extra", {1});
  CHECK_THROWS_AS(Model(c, wrong), Error);
}

TEST_CASE("classification forward shape and eval determinism") {
  const Model m(tiny_config(), 1);
  const PointCloud cloud = tiny_cloud(ShapeKind::kCube, 2);
  const Tensor a = m.predict(cloud);
  CHECK(a.shape() == Shape{1, 4});
  CHECK(bitwise_equal(a, m.predict(cloud)));

  Tape tape;
  CounterRng r1(9), r2(9);
  const Tensor t1 = m.forward(tape, cloud, Mode::kTrain, &r1, false).logits;
  const Tensor t2 = m.forward(tape, cloud, Mode::kTrain, &r2, false).logits;
  CHECK(bitwise_equal(t1, t2));
  CHECK_THROWS_AS(m.forward(tape, cloud, Mode::kTrain, nullptr, false), Error);

  PointCloud small = cloud;
  small.coords.resize(6);
  CHECK_THROWS_AS(m.predict(small), Error);
}

TEST_CASE("segmentation forward shape") {
  const ModelConfig c = tiny_config(Task::kSegment);
  const Model m(c, 1);
  const PointCloud cloud = tiny_cloud(ShapeKind::kCylinder, 2);
  const Tensor logits = m.predict(cloud);
  CHECK(logits.shape() == Shape{64, static_cast<std::size_t>(c.num_parts())});
}

TEST_CASE("a point on a centroid receives that centroid's feature") {
  const Model m(tiny_config(Task::kSegment), 5);
  const PointCloud cloud = tiny_cloud(ShapeKind::kTwinSpheres, 6);
  Tape tape;
  const ForwardResult r = m.forward(tape, cloud, Mode::kEval, nullptr, false);
  const std::size_t width = r.region_level.dim(1);
  REQUIRE(r.interpolated.dim(1) == width);
  for (std::size_t j = 0; j < r.centroids.size(); ++j) {
    for (std::size_t d = 0; d < width; ++d) {
      CHECK(r.interpolated.data()[r.centroids[j] * width + d] == r.region_level.data()[j * width + d]);
    }
  }
}

TEST_CASE("logits are invariant under translation") {
  for (Task task : {Task::kClassify, Task::kSegment}) {
    const Model m(tiny_config(task), 11);
    for (std::uint64_t s = 0; s < 4; ++s) {
      const PointCloud cloud = tiny_cloud(task == Task::kClassify ? ShapeKind::kSphere : ShapeKind::kCylinder, s);
      const Point3 t = {3.0 + static_cast<double>(s), -2.5, 7.25};
      CHECK(max_diff(m.predict(cloud), m.predict(shifted(cloud, t))) <= 1e-9);
    }
  }
}

TEST_CASE("disabling inter-region encoding equals the identity similarity") {
  ModelConfig off = tiny_config();
  off.inter_region = false;
  ModelConfig huge = tiny_config();
  huge.gamma = 1e300;
  const Model a(off, 4);
  const Model b(huge, a.params());
  for (std::uint64_t s = 0; s < 3; ++s) {
    const PointCloud cloud = tiny_cloud(ShapeKind::kCylinder, s);
    CHECK(max_diff(a.predict(cloud), b.predict(cloud)) <= 1e-9);
  }
}

TEST_CASE("mean and max aggregation agree on a single scale") {
  ModelConfig mean = tiny_config();
  mean.scales = {8};
  mean.filter_kinds = 1;
  mean.aggregation = Aggregation::kMean;
  ModelConfig max = mean;
  max.aggregation = Aggregation::kMax;
  ModelConfig con = mean;
  con.aggregation = Aggregation::kConcat;
  const Model a(mean, 2);
  const Model b(max, a.params());
  const Model c(con, a.params());
  const PointCloud cloud = tiny_cloud(ShapeKind::kCube, 1);
  CHECK(max_diff(a.predict(cloud), b.predict(cloud)) <= 1e-9);
  CHECK(max_diff(a.predict(cloud), c.predict(cloud)) <= 1e-9);
}

TEST_CASE("argmax helpers") {
  CHECK(argmax_class(Tensor::from({1, 4}, {0.1, 0.9, 0.9, -1})) == 1);
  const Tensor l = Tensor::from({2, 3}, {5, 1, 2, 0, 3, 1});
  CHECK(argmax_parts(l) == std::vector<int>{0, 1});
  CHECK(argmax_parts(l, 1, 2) == std::vector<int>{2, 1});
  CHECK_THROWS_AS(argmax_parts(l, 2, 2), Error);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = scratch_dir("model_checkpoint");
  RunConfig cfg;
  cfg.model = tiny_config();
  const Model m(cfg.model, 21);
  AdamState adam = make_adam_state(m.params());
  adam.step = 3;
  adam.m[0][0] = 0.5;
  adam.v[1][2] = 0.25;
  CounterRng rng(99);
  rng.next_u64();
  const Checkpoint ck = make_checkpoint(cfg, m, adam, 4, rng);

  save_checkpoint(dir / "a.ckpt", ck);
  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  save_checkpoint(dir / "b.ckpt", back);
  CHECK(read_file(dir / "a.ckpt") == read_file(dir / "b.ckpt"));
  CHECK(back.epoch == 4);
  CHECK(back.rng_seed == 99);
  CHECK(back.rng_counter == 1);
  CHECK(back.optimizer.step == 3);
  CHECK(back.optimizer.m[0][0] == 0.5);
  CHECK(back.optimizer.v[1][2] == 0.25);
  CHECK(serialize_run_config(back.config) == serialize_run_config(cfg));

  const Model restored = model_from_checkpoint(back);
  const PointCloud cloud = tiny_cloud(ShapeKind::kSphere, 3);
  CHECK(bitwise_equal(m.predict(cloud), restored.predict(cloud)));
}

TEST_CASE("checkpoint corruption is detected") {
  RunConfig cfg;
  cfg.model = tiny_config();
  const Model m(cfg.model, 1);
  const auto bytes = encode_checkpoint(make_checkpoint(cfg, m, make_adam_state(m.params()), 0, CounterRng(1)));
  CHECK_NOTHROW(decode_checkpoint(bytes));

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_checkpoint(bad_magic), doctest::Contains("magic"), Error);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  CHECK_THROWS_WITH_AS(decode_checkpoint(flipped), doctest::Contains("checksum"), Error);

  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 20);
  CHECK_THROWS_AS(decode_checkpoint(cut), Error);
  CHECK_THROWS_AS(load_checkpoint(scratch_dir("model_missing") / "none.ckpt"), Error);
}
