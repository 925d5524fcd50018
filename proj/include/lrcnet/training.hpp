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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lrcnet/checkpoint.hpp"
#include "lrcnet/config.hpp"
#include "lrcnet/dataio.hpp"
#include "lrcnet/metrics.hpp"
#include "lrcnet/model.hpp"
#include "lrcnet/optimizer.hpp"

namespace lrcnet {

/// 0 means: LRCNET_THREADS if set, else the hardware thread count.
std::size_t resolve_threads(std::size_t requested);

/// Throws when class ids or part labels do not fit the config.
void check_dataset(const ModelConfig& config, std::span<const PointCloud> clouds);

struct BatchGradient {
  double loss = 0.0;
  Gradients grads;
};

/// Loss of a batch and its parameter gradients. Classification averages the
/// per-shape cross-entropy; segmentation averages over every point in the
/// batch. Element i draws its randomness from CounterRng(rng_seed).fork(i),
/// and element gradients are summed in index order, so the result does not
/// depend on the thread count.
BatchGradient batch_gradient(const Model& model, std::span<const PointCloud* const> batch, Mode mode,
                             std::uint64_t rng_seed, std::size_t threads = 1);
/// Forward-only version of batch_gradient's loss. When branch_signature is
/// given it receives the combined Tape::branch_signature() of the batch.
double batch_loss(const Model& model, std::span<const PointCloud* const> batch, Mode mode, std::uint64_t rng_seed,
                  std::uint64_t* branch_signature = nullptr);

/// Eval-mode metrics. Segmentation predictions are restricted to the parts
/// of each shape's category.
MetricsReport evaluate(const Model& model, std::span<const PointCloud> clouds, std::size_t threads = 1);
/// Test accuracy for classification, instance mIoU for segmentation.
double primary_metric(const MetricsReport& report, Task task);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  MetricsReport test;
};

/// "epoch<TAB>lr<TAB>train_loss<TAB>test_acc[<TAB>test_miou]"
std::string format_log_line(const EpochLog& entry, Task task);

struct TrainResult {
  Checkpoint best;
  Checkpoint last;
  std::vector<EpochLog> log;
  std::size_t optimizer_steps = 0;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Shuffled mini-batches (last partial batch kept), Adam with the step
/// schedule, test metrics every epoch, best checkpoint kept by the primary
/// metric. Clouds are normalized first when config.train.normalize is set.
TrainResult train(const RunConfig& config, std::span<const PointCloud> train_set,
                  std::span<const PointCloud> test_set, const EpochCallback& on_epoch = {});
/// Loads both manifests from the config.
TrainResult train(const RunConfig& config, const EpochCallback& on_epoch = {});

std::vector<PointCloud> prepare_clouds(std::span<const PointCloud> clouds, bool normalize);

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/// "key=v1,v2,..."
SweepAxis parse_sweep_axis(std::string_view text);

struct SweepRow {
  std::vector<std::pair<std::string, std::string>> settings;
  double metric = 0.0;
  std::size_t best_epoch = 0;
};

/// Trains every point of the Cartesian grid with the base seed. Rows come
/// back in grid order.
std::vector<SweepRow> sweep(const RunConfig& base, std::span<const SweepAxis> grid,
                            std::span<const PointCloud> train_set, std::span<const PointCloud> test_set);
/// Ranked by metric, best first; ties keep grid order.
std::string format_sweep_table(std::span<const SweepRow> rows, Task task);

}  // namespace lrcnet
