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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "lrcnet/model_config.hpp"

namespace lrcnet {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double lr_decay = 0.3;
  std::size_t lr_step = 20;
  double lr_floor = 1e-5;
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::uint64_t seed = 7;
  /// Worker threads; 0 picks LRCNET_THREADS or the hardware count.
  std::size_t threads = 0;
  /// Stop once test accuracy (classification) or mIoU (segmentation)
  /// reaches this value; 0 disables.
  double target_metric = 0.0;
  bool normalize = true;
};

/// Everything a run needs; serialized as "key = value" lines.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};

/// Unknown keys, duplicate keys and malformed values are errors. Relative
/// manifest paths resolve against base_dir. Omitting filter_kinds sets it to
/// the number of scales.
RunConfig parse_run_config(std::string_view text, const std::string& source = "<memory>",
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical text: every key in a fixed order, reals at 17 significant digits.
std::string serialize_run_config(const RunConfig& config);

/// Applies one "key = value" assignment (used for sweep grids and flags).
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value,
                        const std::filesystem::path& base_dir = {});

}  // namespace lrcnet
