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

#include "lrcnet/training.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "lrcnet/error.hpp"
#include "parallel.hpp"

namespace lrcnet {

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LRCNET_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void check_dataset(const ModelConfig& config, std::span<const PointCloud> clouds) {
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const auto& c = clouds[i];
    const std::string where = "shape " + std::to_string(i);
    if (!c.class_id) throw Error(where + " has no class id");
    if (config.task == Task::kClassify) {
      if (*c.class_id < 0 || *c.class_id >= config.num_classes) {
        throw Error(where + ": class " + std::to_string(*c.class_id) + " outside the configured " +
                    std::to_string(config.num_classes) + " classes");
      }
      validate_cloud(c);
    } else {
      const int categories = static_cast<int>(config.parts_per_category.size());
      if (*c.class_id < 0 || *c.class_id >= categories) {
        throw Error(where + ": category " + std::to_string(*c.class_id) + " outside the configured " +
                    std::to_string(categories) + " categories");
      }
      if (!c.labels) throw Error(where + " has no part labels");
      validate_cloud(c, config.num_parts());
      const int lo = config.part_offsets()[*c.class_id];
      const int hi = lo + config.parts_per_category[*c.class_id];
      for (int l : *c.labels) {
        if (l < lo || l >= hi) {
          throw Error(where + ": part label " + std::to_string(l) + " is not a part of category " +
                      std::to_string(*c.class_id));
        }
      }
    }
  }
}

namespace {

/// Per-element share of the batch loss: 1/B for classification, n_i / total
/// points for segmentation.
std::vector<double> element_weights(const ModelConfig& config, std::span<const PointCloud* const> batch) {
  std::vector<double> w(batch.size());
  if (config.task == Task::kClassify) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(batch.size()));
  } else {
    std::size_t total = 0;
    for (const auto* c : batch) total += c->size();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      w[i] = static_cast<double>(batch[i]->size()) / static_cast<double>(total);
    }
  }
  return w;
}

Tensor element_loss(Tape& tape, const ModelConfig& config, const ForwardResult& fwd, const PointCloud& cloud,
                    double weight) {
  Tensor ce;
  if (config.task == Task::kClassify) {
    const int target = cloud.class_id.value();
    ce = softmax_cross_entropy(tape, fwd.logits, std::span<const int>(&target, 1));
  } else {
    ce = softmax_cross_entropy(tape, fwd.logits, *cloud.labels);
  }
  return scale(tape, ce, weight);
}

}  // namespace

BatchGradient batch_gradient(const Model& model, std::span<const PointCloud* const> batch, Mode mode,
                             std::uint64_t rng_seed, std::size_t threads) {
  if (batch.empty()) throw Error("batch_gradient: empty batch");
  const auto weights = element_weights(model.config(), batch);
  const CounterRng base(rng_seed);
  BatchGradient out;
  out.grads = zero_gradients(model.params());
  threads = std::max<std::size_t>(1, threads);

  // Waves of `threads` elements bound memory; summation stays in index order.
  for (std::size_t wave = 0; wave < batch.size(); wave += threads) {
    const std::size_t count = std::min(threads, batch.size() - wave);
    std::vector<std::vector<Tensor>> leaves(count);
    std::vector<double> losses(count);
    detail::parallel_for(count, threads, [&](std::size_t k) {
      const std::size_t i = wave + k;
      CounterRng rng = base.fork(i);
      Tape tape;
      auto fwd = model.forward(tape, *batch[i], mode, &rng, true);
      Tensor loss = element_loss(tape, model.config(), fwd, *batch[i], weights[i]);
      tape.backward(loss);
      losses[k] = loss.item();
      leaves[k] = std::move(fwd.leaves);
    });
    for (std::size_t k = 0; k < count; ++k) {
      out.loss += losses[k];
      for (std::size_t p = 0; p < out.grads.size(); ++p) {
        const auto g = leaves[k][p].grad();
        auto& acc = out.grads[p];
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
      }
    }
  }
  return out;
}

double batch_loss(const Model& model, std::span<const PointCloud* const> batch, Mode mode, std::uint64_t rng_seed,
                  std::uint64_t* branch_signature) {
  if (batch.empty()) throw Error("batch_loss: empty batch");
  const auto weights = element_weights(model.config(), batch);
  const CounterRng base(rng_seed);
  double total = 0.0;
  if (branch_signature) *branch_signature = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CounterRng rng = base.fork(i);
    Tape tape;
    tape.set_track_branches(branch_signature != nullptr);
    auto fwd = model.forward(tape, *batch[i], mode, &rng, false);
    total += element_loss(tape, model.config(), fwd, *batch[i], weights[i]).item();
    if (branch_signature) *branch_signature = mix64(*branch_signature ^ tape.branch_signature());
  }
  return total;
}

MetricsReport evaluate(const Model& model, std::span<const PointCloud> clouds, std::size_t threads) {
  const auto& cfg = model.config();
  std::vector<Tensor> logits(clouds.size());
  detail::parallel_for(clouds.size(), std::max<std::size_t>(1, threads),
                       [&](std::size_t i) { logits[i] = model.predict(clouds[i]); });
  MetricsAccumulator acc(cfg.task == Task::kClassify ? static_cast<std::size_t>(cfg.num_classes) : 0);
  const auto offsets = cfg.part_offsets();
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const auto& c = clouds[i];
    if (cfg.task == Task::kClassify) {
      acc.add_classification(argmax_class(logits[i]), c.class_id.value());
    } else {
      const int cat = c.class_id.value();
      const int first = offsets.at(cat);
      const int count = cfg.parts_per_category.at(cat);
      std::vector<int> parts(count);
      std::iota(parts.begin(), parts.end(), first);
      acc.add_segmentation(static_cast<std::size_t>(cat), argmax_parts(logits[i], first, count), *c.labels, parts);
    }
  }
  return acc.report();
}

double primary_metric(const MetricsReport& report, Task task) {
  return task == Task::kClassify ? report.accuracy : report.instance_miou;
}

std::string format_log_line(const EpochLog& e, Task task) {
  char buf[256];
  int n = std::snprintf(buf, sizeof buf, "%zu\t%.6g\t%.6f\t%.6f", e.epoch, e.lr, e.train_loss, e.test.accuracy);
  std::string line(buf, static_cast<std::size_t>(n));
  if (task == Task::kSegment) {
    std::snprintf(buf, sizeof buf, "\t%.6f", e.test.instance_miou);
    line += buf;
  }
  return line;
}

std::vector<PointCloud> prepare_clouds(std::span<const PointCloud> clouds, bool normalize) {
  std::vector<PointCloud> out;
  out.reserve(clouds.size());
  for (const auto& c : clouds) out.push_back(normalize ? normalize_cloud(c) : c);
  return out;
}

TrainResult train(const RunConfig& config, std::span<const PointCloud> train_set,
                  std::span<const PointCloud> test_set, const EpochCallback& on_epoch) {
  config.model.validate();
  if (train_set.empty()) throw Error("train: the training set is empty");
  if (config.train.batch_size < 1) throw Error("train: batch_size must be >= 1");
  check_dataset(config.model, train_set);
  check_dataset(config.model, test_set);
  const auto train_clouds = prepare_clouds(train_set, config.train.normalize);
  const auto test_clouds = prepare_clouds(test_set, config.train.normalize);
  const std::size_t threads = resolve_threads(config.train.threads);
  const Task task = config.model.task;

  CounterRng rng(config.train.seed);
  Model model(config.model, rng.fork(0).next_u64());
  AdamState optimizer = make_adam_state(model.params());
  std::vector<std::size_t> order(train_clouds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  bool have_best = false;
  for (std::size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr_schedule(epoch, config.train);
    shuffle(std::span<std::size_t>(order), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.train.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.train.batch_size);
      std::vector<const PointCloud*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_clouds[order[i]]);
      const std::uint64_t step_seed = rng.next_u64();
      auto bg = batch_gradient(model, batch, Mode::kTrain, step_seed, threads);
      adam_step(model.params(), bg.grads, optimizer, entry.lr);
      loss_sum += bg.loss;
      ++batches;
      ++result.optimizer_steps;
    }
    entry.train_loss = loss_sum / static_cast<double>(batches);
    if (!test_clouds.empty()) entry.test = evaluate(model, test_clouds, threads);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    const double metric = primary_metric(entry.test, task);
    result.last = make_checkpoint(config, model, optimizer, epoch + 1, rng);
    if (!have_best || metric > result.best_metric) {
      result.best = result.last;
      result.best_metric = metric;
      result.best_epoch = epoch;
      have_best = true;
    }
    if (config.train.target_metric > 0.0 && metric >= config.train.target_metric) break;
  }
  if (!have_best) {
    result.last = make_checkpoint(config, model, optimizer, 0, rng);
    result.best = result.last;
  }
  return result;
}

TrainResult train(const RunConfig& config, const EpochCallback& on_epoch) {
  if (config.train.train_manifest.empty()) throw Error("train: no train_manifest configured");
  const auto train_manifest = load_manifest(config.train.train_manifest, Split::kTrain);
  const auto train_set = load_dataset(train_manifest);
  std::vector<PointCloud> test_set;
  if (!config.train.test_manifest.empty()) {
    test_set = load_dataset(load_manifest(config.train.test_manifest, Split::kTest));
  }
  return train(config, train_set, test_set, on_epoch);
}

SweepAxis parse_sweep_axis(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) throw Error("sweep axis must look like key=v1,v2,...");
  SweepAxis axis;
  axis.key = std::string(text.substr(0, eq));
  std::string_view rest = text.substr(eq + 1);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    auto comma = rest.find(',', pos);
    if (comma == std::string_view::npos) comma = rest.size();
    auto value = rest.substr(pos, comma - pos);
    if (value.empty()) throw Error("sweep axis " + axis.key + " has an empty value");
    axis.values.emplace_back(value);
    pos = comma + 1;
  }
  return axis;
}

std::vector<SweepRow> sweep(const RunConfig& base, std::span<const SweepAxis> grid,
                            std::span<const PointCloud> train_set, std::span<const PointCloud> test_set) {
  if (grid.empty()) throw Error("sweep: empty grid");
  for (const auto& axis : grid) {
    if (axis.values.empty()) throw Error("sweep: axis " + axis.key + " has no values");
  }
  std::vector<SweepRow> rows;
  std::vector<std::size_t> cursor(grid.size(), 0);
  for (;;) {
    RunConfig config = base;
    SweepRow row;
    for (std::size_t a = 0; a < grid.size(); ++a) {
      const auto& value = grid[a].values[cursor[a]];
      apply_config_value(config, grid[a].key, value);
      row.settings.emplace_back(grid[a].key, value);
    }
    // Sweeping the scale list without naming filter_kinds keeps H = T.
    bool names_kinds = false, names_scales = false;
    for (const auto& axis : grid) {
      names_kinds = names_kinds || axis.key == "filter_kinds";
      names_scales = names_scales || axis.key == "scales";
    }
    if (names_scales && !names_kinds) config.model.filter_kinds = config.model.num_scales();
    auto result = train(config, train_set, test_set);
    row.metric = result.best_metric;
    row.best_epoch = result.best_epoch;
    rows.push_back(std::move(row));

    std::size_t a = grid.size();
    while (a > 0) {
      --a;
      if (++cursor[a] < grid[a].values.size()) break;
      cursor[a] = 0;
      if (a == 0) return rows;
    }
  }
}

std::string format_sweep_table(std::span<const SweepRow> rows, Task task) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].metric > rows[b].metric; });
  std::string out = "rank\tsetting\t";
  out += task == Task::kClassify ? "test_acc" : "test_miou";
  out += "\tbest_epoch\n";
  char buf[64];
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& row = rows[order[r]];
    std::string setting;
    for (const auto& [k, v] : row.settings) {
      if (!setting.empty()) setting += ' ';
      setting += k + "=" + v;
    }
    std::snprintf(buf, sizeof buf, "\t%.4f\t%zu\n", row.metric, row.best_epoch);
    out += std::to_string(r + 1) + "\t" + setting + buf;
  }
  return out;
}

}  // namespace lrcnet
