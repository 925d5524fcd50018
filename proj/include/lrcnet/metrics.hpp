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

namespace lrcnet {

/// IoU of every part of one shape plus their mean.
struct ShapeIou {
  std::vector<double> part_iou;
  double iou = 0.0;
};

/// Per-part IoU = |pred & truth| / |pred | truth| over the shape's points,
/// scoring 1 for a part absent from both. Throws when a label falls outside
/// part_classes.
ShapeIou mean_iou(std::span<const int> pred, std::span<const int> truth, std::span<const int> part_classes);

struct MetricsReport {
  std::size_t correct = 0;
  std::size_t total = 0;
  /// Classification: shapes correct / total. Segmentation: points correct.
  double accuracy = 0.0;
  /// Segmentation only: mean shape IoU per category (NaN if a category had
  /// no shapes) and over all shapes.
  std::vector<double> category_iou;
  double instance_miou = 0.0;
  std::vector<double> class_accuracy;
};

/// Streams predictions into a MetricsReport.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(std::size_t num_classes) : class_correct_(num_classes), class_total_(num_classes) {}

  void add_classification(int predicted, int truth);
  void add_segmentation(std::size_t category, std::span<const int> pred, std::span<const int> truth,
                        std::span<const int> part_classes);
  MetricsReport report() const;

 private:
  std::size_t correct_ = 0;
  std::size_t total_ = 0;
  std::vector<std::size_t> class_correct_;
  std::vector<std::size_t> class_total_;
  std::vector<double> category_sum_;
  std::vector<std::size_t> category_count_;
  double shape_iou_sum_ = 0.0;
  std::size_t shapes_ = 0;
};

}  // namespace lrcnet
