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


#include "lrcnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lrcnet/dataio.hpp"
#include "lrcnet/model.hpp"
#include "lrcnet/rng.hpp"
#include "lrcnet/training.hpp"

namespace lrcnet {

namespace {

std::vector<PointCloud> make_batch(const ModelConfig& config, const GradCheckOptions& options, const CounterRng& rng) {
  std::vector<PointCloud> clouds;
  const std::vector<int> offsets = config.part_offsets();
  for (std::size_t i = 0; i < options.batch; ++i) {
    const std::uint64_t seed = rng.fork(i).next_u64();
    PointCloud c;
    if (config.task == Task::kClassify) {
      const int cls = static_cast<int>(i % static_cast<std::size_t>(std::min(config.num_classes, 4)));
      c = gen_synthetic(static_cast<ShapeKind>(cls), options.points, 0.01, seed);
      c.labels.reset();
    } else {
      const int cat = static_cast<int>(i % config.parts_per_category.size());
      const ShapeKind kind = cat % 2 == 0 ? ShapeKind::kCylinder : ShapeKind::kTwinSpheres;
      c = gen_synthetic(kind, options.points, 0.01, seed);
      for (int& l : *c.labels) l = offsets[cat] + l % config.parts_per_category[cat];
      c.class_id = cat;
    }
    clouds.push_back(normalize_cloud(c));
  }
  return clouds;
}

GradCheckReport check_once(const Model& model, std::span<const PointCloud* const> batch,
                           const GradCheckOptions& options, std::uint64_t step_seed, CounterRng pick) {
  const BatchGradient analytic = batch_gradient(model, batch, Mode::kTrain, step_seed, 1);
  std::uint64_t base_signature = 0;
  batch_loss(model, batch, Mode::kTrain, step_seed, &base_signature);

  GradCheckReport report;
  for (std::size_t p = 0; p < model.params().size(); ++p) {
    const Parameter& param = model.params().at(p);
    std::vector<double>& value = *param.value;
    std::vector<std::size_t> entries(value.size());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(entries), pick);
    GradCheckGroup group{param.name, 0, 0, 0.0};
    for (std::size_t e : entries) {
      if (group.checked == options.samples_per_tensor) break;
      const double saved = value[e];
      std::uint64_t sig_up = 0, sig_down = 0;
      value[e] = saved + options.step;
      const double up = batch_loss(model, batch, Mode::kTrain, step_seed, &sig_up);
      value[e] = saved - options.step;
      const double down = batch_loss(model, batch, Mode::kTrain, step_seed, &sig_down);
      value[e] = saved;
      if (sig_up != base_signature || sig_down != base_signature) {
        ++group.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * options.step);
      group.max_rel_error =
          std::max(group.max_rel_error, relative_error(analytic.grads[p][e], numeric, options.floor));
      ++group.checked;
    }
    if (group.checked == 0) group.max_rel_error = std::numeric_limits<double>::infinity();
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport gradient_check(const ModelConfig& config, const GradCheckOptions& options) {
  config.validate();
  const CounterRng rng(options.seed);
  const Model model(config, rng.fork(0).next_u64());
  const std::vector<PointCloud> clouds = make_batch(config, options, rng.fork(1));
  std::vector<const PointCloud*> batch;
  for (const auto& c : clouds) batch.push_back(&c);
  const std::uint64_t step_seed = rng.fork(2).next_u64();

  GradCheckReport report;
  for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
    // Zero biases put each centroid's own row (relative coordinate 0) exactly
    // on the ReLU kink; probe at a random generic point instead.
    CounterRng bias_rng = rng.fork(4).fork(attempt);
    for (const Parameter& param : model.params().all()) {
      if (param.shape.size() != 1) continue;
      for (double& v : *param.value) v = bias_rng.uniform(-0.1, 0.1);
    }
    report = check_once(model, batch, options, step_seed, rng.fork(3).fork(attempt));
    report.attempts = attempt + 1;
    const bool covered = std::all_of(report.groups.begin(), report.groups.end(),
                                     [](const GradCheckGroup& g) { return g.checked > 0; });
    if (covered) break;
  }
  return report;
}

}  // namespace lrcnet
