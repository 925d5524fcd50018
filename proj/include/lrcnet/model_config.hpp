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
#include <string>
#include <string_view>
#include <vector>

#include "lrcnet/layers.hpp"

namespace lrcnet {

enum class Task { kClassify, kSegment };

/// Network hyperparameters. Defaults are the desk-scale configuration; see
/// full_scale_config() for the full-size one.
struct ModelConfig {
  Task task = Task::kClassify;
  std::size_t num_centroids = 64;                   // M
  std::vector<std::size_t> scales = {8, 16, 32, 64};  // K_1 < ... < K_T
  std::size_t region_dim = 64;                      // D
  double gamma = 1e4;
  std::size_t filter_kinds = 4;                     // H, window sizes 1..H
  int num_classes = 4;
  /// Segmentation: part count of each category. Part labels are global and
  /// laid out category by category.
  std::vector<int> parts_per_category = {3, 2};
  Aggregation aggregation = Aggregation::kIntraConv;
  bool inter_region = true;
  GlobalPool global_pool = GlobalPool::kMax;
  double dropout = 0.4;
  std::string precision = "f64";

  std::vector<std::size_t> area_widths = {64, 128};  // hidden widths; output is D
  std::vector<std::size_t> global_widths = {256, 512, 1024};
  std::vector<std::size_t> head_widths = {512, 256};  // followed by num_classes
  std::size_t skip_dim = 32;
  std::vector<std::size_t> propagation_widths = {256, 128};
  std::vector<std::size_t> segment_widths = {256, 128};  // followed by num_parts

  std::size_t num_scales() const { return scales.size(); }
  int num_parts() const;
  /// First global part label of each category.
  std::vector<int> part_offsets() const;
  /// Width of the per-region feature entering the global PointNet.
  std::size_t aggregated_dim() const;

  /// Throws lrcnet::Error when an invariant is violated.
  void validate() const;
};

/// M = 384, T = 4, K = [16, 32, 64, 128], D = 128.
ModelConfig full_scale_config();
/// N = 64, M = 8, T = 2, K = [4, 8], D = 8, C = 4; used for gradient checks.
ModelConfig tiny_config(Task task = Task::kClassify);

std::string_view task_name(Task t);
std::string_view aggregation_name(Aggregation a);
std::string_view global_pool_name(GlobalPool p);
Task parse_task(std::string_view s);
Aggregation parse_aggregation(std::string_view s);
GlobalPool parse_global_pool(std::string_view s);

}  // namespace lrcnet
