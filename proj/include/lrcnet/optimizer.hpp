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
#include <span>
#include <vector>

#include "lrcnet/config.hpp"
#include "lrcnet/model.hpp"

namespace lrcnet {

/// One flat gradient buffer per parameter, in ParameterSet order.
using Gradients = std::vector<std::vector<double>>;

Gradients zero_gradients(const ParameterSet& params);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  Gradients m;
  Gradients v;
};

AdamState make_adam_state(const ParameterSet& params);

/// Bias-corrected Adam update. Every gradient is checked before any
/// parameter changes; a non-finite entry raises NumericError naming the
/// parameter.
void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state, double lr);

/// lr * decay^floor(epoch / step), floored at lr_floor.
double lr_schedule(std::size_t epoch, const TrainConfig& config);

}  // namespace lrcnet
