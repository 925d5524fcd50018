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
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lrcnet/config.hpp"
#include "lrcnet/dataio.hpp"

namespace lrcnet {

struct SynthOptions {
  Task task = Task::kClassify;
  std::size_t train_count = 200;
  std::size_t test_count = 80;
  std::size_t points = 256;
  double noise_sigma = 0.01;
  std::uint64_t seed = 7;
};

struct SynthDataset {
  std::vector<PointCloud> train;
  std::vector<PointCloud> test;
};

/// Classification cycles sphere, cube, cylinder, twin_spheres (class = kind
/// ordinal). Segmentation alternates cylinder (category 0, parts 0..2) and
/// twin_spheres (category 1, parts 3..4).
SynthDataset make_synthetic_dataset(const SynthOptions& options);

/// Writes <dir>/{train,test}/NNNN.xyz, <dir>/train.txt, <dir>/test.txt and a
/// <dir>/run.cfg pointing at both manifests. Returns the config path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SynthDataset& data,
                                              const RunConfig& config);

}  // namespace lrcnet
