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


#include "lrcnet/synth.hpp"

#include <cstdio>
#include <fstream>

#include "lrcnet/error.hpp"
#include "lrcnet/rng.hpp"

namespace lrcnet {

namespace {

constexpr ShapeKind kClassifyKinds[] = {ShapeKind::kSphere, ShapeKind::kCube, ShapeKind::kCylinder,
                                        ShapeKind::kTwinSpheres};
constexpr ShapeKind kSegmentKinds[] = {ShapeKind::kCylinder, ShapeKind::kTwinSpheres};

std::vector<PointCloud> make_split(const SynthOptions& o, std::size_t count, std::uint64_t stream) {
  const CounterRng base = CounterRng(o.seed).fork(stream);
  const std::vector<int> offsets = ModelConfig{}.part_offsets();
  std::vector<PointCloud> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t seed = base.fork(i).next_u64();
    if (o.task == Task::kClassify) {
      out.push_back(gen_synthetic(kClassifyKinds[i % 4], o.points, o.noise_sigma, seed));
      out.back().labels.reset();
    } else {
      const int category = static_cast<int>(i % 2);
      PointCloud c = gen_synthetic(kSegmentKinds[category], o.points, o.noise_sigma, seed);
      for (int& l : *c.labels) l += offsets[category];
      c.class_id = category;
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace

SynthDataset make_synthetic_dataset(const SynthOptions& options) {
  if (options.points < 8) throw Error("synthetic clouds need at least 8 points");
  return {make_split(options, options.train_count, 1), make_split(options, options.test_count, 2)};
}

std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SynthDataset& data,
                                              const RunConfig& config) {
  namespace fs = std::filesystem;
  auto write_split = [&](const std::vector<PointCloud>& clouds, const char* name, Split split) {
    const fs::path sub = dir / name;
    fs::create_directories(sub);
    DatasetManifest manifest;
    manifest.split = split;
    for (std::size_t i = 0; i < clouds.size(); ++i) {
      char file[32];
      std::snprintf(file, sizeof(file), "%04zu.xyz", i);
      save_xyz(sub / file, clouds[i]);
      manifest.entries.push_back({sub / file, clouds[i].class_id.value()});
    }
    const fs::path path = dir / (std::string(name) + ".txt");
    save_manifest(path, manifest);
    return path;
  };
  fs::create_directories(dir);
  write_split(data.train, "train", Split::kTrain);
  write_split(data.test, "test", Split::kTest);
  // Relative to run.cfg, so the directory can move.
  RunConfig cfg = config;
  cfg.train.train_manifest = "train.txt";
  cfg.train.test_manifest = "test.txt";
  const std::string text = serialize_run_config(cfg);
  const fs::path cfg_path = dir / "run.cfg";
  std::ofstream out(cfg_path, std::ios::binary);
  if (!out) throw Error("cannot write " + cfg_path.string());
  out << text;
  if (!out) throw Error("cannot write " + cfg_path.string());
  return cfg_path;
}

}  // namespace lrcnet
