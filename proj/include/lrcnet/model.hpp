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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lrcnet/autodiff.hpp"
#include "lrcnet/dataio.hpp"
#include "lrcnet/model_config.hpp"

namespace lrcnet {

struct Parameter {
  std::string name;
  Shape shape;
  std::shared_ptr<std::vector<double>> value;
};

/// Learnable tensors in a fixed, named order. Copying a ParameterSet shares
/// storage; use clone() for an independent copy.
class ParameterSet {
 public:
  Parameter& add(std::string name, Shape shape);
  std::span<const Parameter> all() const { return params_; }
  std::size_t size() const { return params_.size(); }
  const Parameter& at(std::size_t i) const { return params_.at(i); }
  const Parameter& find(std::string_view name) const;
  std::size_t total_size() const;
  ParameterSet clone() const;

 private:
  std::vector<Parameter> params_;
};

enum class Mode { kTrain, kEval };

struct ForwardResult {
  /// [1, C] class logits or [N, P] per-point part logits.
  Tensor logits;
  /// Tape leaves for the parameters, in ParameterSet order.
  std::vector<Tensor> leaves;
  std::vector<std::size_t> centroids;
  /// Segmentation only: [M, F] per-centroid features that feed the
  /// interpolation, in centroid order.
  Tensor region_level;
  /// Segmentation only: centroid features interpolated onto every point,
  /// before the skip features are appended.
  Tensor interpolated;
};

/// The full network for one task. Parameters are read-only during forward, so
/// one Model can serve concurrent forward passes on separate tapes.
class Model {
 public:
  Model(ModelConfig config, std::uint64_t init_seed);
  /// Adopts existing parameters; names and shapes must match the layout.
  Model(ModelConfig config, ParameterSet params);

  const ModelConfig& config() const { return config_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& params() { return params_; }

  /// Train mode draws the FPS start index and dropout masks from rng; eval
  /// mode starts FPS at index 0 and is deterministic. track_grad exposes the
  /// parameters to the tape as gradient-carrying leaves.
  ForwardResult forward(Tape& tape, const PointCloud& cloud, Mode mode, CounterRng* rng,
                        bool track_grad) const;

  /// Eval-mode logits without recording a tape.
  Tensor predict(const PointCloud& cloud) const;

  /// (name, shape) of every parameter this config needs, in order.
  static std::vector<std::pair<std::string, Shape>> layout(const ModelConfig& config);

 private:
  ModelConfig config_;
  ParameterSet params_;
};

/// Class of a [1, C] logit row (first maximum wins).
int argmax_class(const Tensor& logits);
/// Per-point labels from [N, P] logits, restricted to parts
/// [first, first + count) when count > 0.
std::vector<int> argmax_parts(const Tensor& logits, int first = 0, int count = 0);

}  // namespace lrcnet
