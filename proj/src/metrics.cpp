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

#include "lrcnet/metrics.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "lrcnet/error.hpp"

namespace lrcnet {

ShapeIou mean_iou(std::span<const int> pred, std::span<const int> truth, std::span<const int> part_classes) {
  if (pred.size() != truth.size()) throw Error("mean_iou: prediction and truth lengths differ");
  if (part_classes.empty()) throw Error("mean_iou: empty part set");
  auto slot = [&](int label) {
    auto it = std::find(part_classes.begin(), part_classes.end(), label);
    if (it == part_classes.end()) {
      throw Error("mean_iou: label " + std::to_string(label) + " is not a part of this category");
    }
    return static_cast<std::size_t>(it - part_classes.begin());
  };
  std::vector<std::size_t> inter(part_classes.size(), 0), uni(part_classes.size(), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = slot(pred[i]), t = slot(truth[i]);
    if (p == t) {
      ++inter[p];
      ++uni[p];
    } else {
      ++uni[p];
      ++uni[t];
    }
  }
  ShapeIou out;
  for (std::size_t k = 0; k < part_classes.size(); ++k) {
    const double iou = uni[k] == 0 ? 1.0 : static_cast<double>(inter[k]) / static_cast<double>(uni[k]);
    out.part_iou.push_back(iou);
    out.iou += iou;
  }
  out.iou /= static_cast<double>(part_classes.size());
  return out;
}

void MetricsAccumulator::add_classification(int predicted, int truth) {
  ++total_;
  if (predicted == truth) ++correct_;
  if (truth >= 0 && static_cast<std::size_t>(truth) < class_total_.size()) {
    ++class_total_[truth];
    if (predicted == truth) ++class_correct_[truth];
  }
}

void MetricsAccumulator::add_segmentation(std::size_t category, std::span<const int> pred,
                                          std::span<const int> truth, std::span<const int> part_classes) {
  const auto shape = mean_iou(pred, truth, part_classes);
  if (category >= category_sum_.size()) {
    category_sum_.resize(category + 1, 0.0);
    category_count_.resize(category + 1, 0);
  }
  category_sum_[category] += shape.iou;
  ++category_count_[category];
  shape_iou_sum_ += shape.iou;
  ++shapes_;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++total_;
    if (pred[i] == truth[i]) ++correct_;
  }
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport r;
  r.correct = correct_;
  r.total = total_;
  r.accuracy = total_ ? static_cast<double>(correct_) / static_cast<double>(total_) : 0.0;
  for (std::size_t c = 0; c < class_total_.size(); ++c) {
    r.class_accuracy.push_back(class_total_[c] ? static_cast<double>(class_correct_[c]) /
                                                     static_cast<double>(class_total_[c])
                                               : std::numeric_limits<double>::quiet_NaN());
  }
  for (std::size_t c = 0; c < category_sum_.size(); ++c) {
    r.category_iou.push_back(category_count_[c] ? category_sum_[c] / static_cast<double>(category_count_[c])
                                                : std::numeric_limits<double>::quiet_NaN());
  }
  r.instance_miou = shapes_ ? shape_iou_sum_ / static_cast<double>(shapes_) : 0.0;
  return r;
}

}  // namespace lrcnet
