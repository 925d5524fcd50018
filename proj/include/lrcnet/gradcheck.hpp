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
#include <string>
#include <vector>

#include "lrcnet/model_config.hpp"

namespace lrcnet {

struct GradCheckOptions {
  std::size_t points = 64;
  std::size_t batch = 2;
  /// Entries probed per parameter tensor; tensors with fewer usable entries
  /// are checked in full. An entry is unusable when its +-step stencil
  /// crosses a ReLU or max-pooling switch point, where the loss is not
  /// differentiable and central differences are meaningless.
  std::size_t samples_per_tensor = 12;
  double step = 1e-5;
  /// Denominator floor of the relative error. Central differences at
  /// step 1e-5 carry roughly 1e-10 of rounding noise, so gradients smaller
  /// than the floor are held to an absolute tolerance of floor * 1e-5.
  double floor = 1e-4;
  /// Bias draws tried until every group has a usable entry.
  std::size_t max_attempts = 8;
  std::uint64_t seed = 7;
};

struct GradCheckGroup {
  std::string name;
  std::size_t checked = 0;
  /// Entries skipped because the stencil crossed a switch point.
  std::size_t skipped = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_rel_error = 0.0;
  std::size_t attempts = 0;
};

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Compares backprop gradients of the batch loss with central differences on
/// a small synthetic batch, in train mode with fixed dropout masks. Biases are
/// drawn at random first so no unit sits exactly on a ReLU kink; if some group
/// has no usable entry the biases are redrawn. A group that never gets one
/// reports an infinite error.
GradCheckReport gradient_check(const ModelConfig& config, const GradCheckOptions& options = {});

}  // namespace lrcnet
