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


#include "lrcnet/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lrcnet/checkpoint.hpp"
#include "lrcnet/error.hpp"
#include "lrcnet/gradcheck.hpp"
#include "lrcnet/synth.hpp"
#include "lrcnet/training.hpp"

namespace lrcnet {

namespace {

namespace fs = std::filesystem;

struct UsageError : Error {
  using Error::Error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "./runs";
  std::string ckpt;
  std::optional<std::size_t> threads;
  std::vector<std::string> set;

  // synth
  std::string task = "classify";
  std::size_t train_count = 200;
  std::size_t test_count = 80;
  std::size_t points = 256;
  double noise = 0.01;

  // eval / segment
  std::string manifest;
  std::string input;
  std::optional<int> category;

  // gradcheck
  std::string gradcheck_task = "both";
  std::size_t samples = 12;

  // sweep
  std::vector<std::string> grid;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

RunConfig load_config_arg(const Options& o) {
  if (o.config.empty()) throw UsageError("--config is required");
  if (!fs::is_regular_file(o.config)) throw UsageError("config file not found: " + o.config);
  RunConfig cfg = load_run_config(o.config);
  const fs::path base = fs::path(o.config).parent_path();
  for (const auto& assignment : o.set) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + assignment + "'");
    apply_config_value(cfg, assignment.substr(0, eq), assignment.substr(eq + 1), base);
  }
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.threads) cfg.train.threads = *o.threads;
  cfg.model.validate();
  return cfg;
}

Checkpoint load_ckpt_arg(const Options& o) {
  if (o.ckpt.empty()) throw UsageError("--ckpt is required");
  if (!fs::is_regular_file(o.ckpt)) throw UsageError("checkpoint not found: " + o.ckpt);
  return load_checkpoint(o.ckpt);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error("cannot write " + path.string());
}

void print_report(std::ostream& out, const MetricsReport& r, Task task) {
  out << "task\t" << task_name(task) << '\n';
  out << "correct\t" << r.correct << '\n';
  out << "total\t" << r.total << '\n';
  out << "accuracy\t" << fmt(r.accuracy) << '\n';
  if (task == Task::kClassify) {
    for (std::size_t c = 0; c < r.class_accuracy.size(); ++c) {
      out << "class_accuracy[" << c << "]\t" << fmt(r.class_accuracy[c]) << '\n';
    }
  } else {
    out << "instance_miou\t" << fmt(r.instance_miou) << '\n';
    for (std::size_t c = 0; c < r.category_iou.size(); ++c) {
      out << "category_iou[" << c << "]\t" << (std::isnan(r.category_iou[c]) ? "nan" : fmt(r.category_iou[c]))
          << '\n';
    }
  }
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthOptions s;
  s.task = parse_task(o.task);
  s.train_count = o.train_count;
  s.test_count = o.test_count;
  s.points = o.points;
  s.noise_sigma = o.noise;
  s.seed = o.seed.value_or(7);
  RunConfig cfg;
  cfg.model.task = s.task;
  if (s.task == Task::kSegment) cfg.model.num_classes = static_cast<int>(cfg.model.parts_per_category.size());
  cfg.train.seed = s.seed;
  const fs::path path = write_synthetic_dataset(o.out, make_synthetic_dataset(s), cfg);
  out << path.string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config_arg(o);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  std::string log;
  const TrainResult result = train(cfg, [&](const EpochLog& e) {
    const std::string line = format_log_line(e, cfg.model.task) + "\n";
    log += line;
    out << line << std::flush;
  });
  write_text(dir / "metrics.tsv", log);
  save_checkpoint(dir / "best.ckpt", result.best);
  save_checkpoint(dir / "last.ckpt", result.last);
  out << "best_epoch\t" << result.best_epoch << '\n' << "best_metric\t" << fmt(result.best_metric) << '\n';
  return kExitOk;
}

std::vector<PointCloud> load_eval_set(const Options& o, const RunConfig& cfg) {
  fs::path manifest = o.manifest.empty() ? cfg.train.test_manifest : fs::path(o.manifest);
  if (manifest.empty()) throw UsageError("--manifest is required when the checkpoint names no test manifest");
  if (!fs::is_regular_file(manifest)) throw UsageError("manifest not found: " + manifest.string());
  return prepare_clouds(load_dataset(load_manifest(manifest, Split::kTest)), cfg.train.normalize);
}

int cmd_eval(const Options& o, std::ostream& out) {
  const Checkpoint ck = load_ckpt_arg(o);
  const Model model = model_from_checkpoint(ck);
  const std::vector<PointCloud> clouds = load_eval_set(o, ck.config);
  check_dataset(model.config(), clouds);
  const std::size_t threads = resolve_threads(o.threads.value_or(ck.config.train.threads));
  print_report(out, evaluate(model, clouds, threads), model.config().task);
  return kExitOk;
}

int cmd_segment(const Options& o, std::ostream& out) {
  const Checkpoint ck = load_ckpt_arg(o);
  const Model model = model_from_checkpoint(ck);
  const ModelConfig& mc = model.config();
  if (mc.task != Task::kSegment) throw UsageError("checkpoint is not a segmentation model");
  if (o.input.empty()) throw UsageError("--input is required");
  const fs::path input = o.input;
  if (!fs::is_regular_file(input)) throw UsageError("input not found: " + input.string());

  struct Item {
    PointCloud cloud;
    std::string name;
  };
  std::vector<Item> items;
  if (input.extension() == ".xyz") {
    PointCloud c = load_xyz(input);
    if (o.category) c.class_id = *o.category;
    items.push_back({std::move(c), input.stem().string()});
  } else {
    const DatasetManifest m = load_manifest(input, Split::kTest);
    const std::vector<PointCloud> clouds = load_dataset(m);
    for (std::size_t i = 0; i < clouds.size(); ++i) {
      char prefix[16];
      std::snprintf(prefix, sizeof(prefix), "%04zu_", i);
      items.push_back({clouds[i], prefix + m.entries[i].path.stem().string()});
    }
  }

  const fs::path dir = o.out;
  fs::create_directories(dir);
  const std::vector<int> offsets = mc.part_offsets();
  for (const Item& item : items) {
    int first = 0, count = 0;
    if (item.cloud.class_id) {
      const int cat = *item.cloud.class_id;
      if (cat < 0 || cat >= static_cast<int>(offsets.size())) {
        throw Error(item.name + ": category " + std::to_string(cat) + " is not configured");
      }
      first = offsets[cat];
      count = mc.parts_per_category[cat];
    }
    const PointCloud prepared = ck.config.train.normalize ? normalize_cloud(item.cloud) : item.cloud;
    PointCloud result;
    result.coords = item.cloud.coords;
    result.labels = argmax_parts(model.predict(prepared), first, count);
    const fs::path path = dir / (item.name + ".xyz");
    save_xyz(path, result);
    out << path.string() << '\t' << result.size() << '\n';
  }
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  std::vector<Task> tasks;
  if (o.gradcheck_task == "both") {
    tasks = {Task::kClassify, Task::kSegment};
  } else {
    tasks = {parse_task(o.gradcheck_task)};
  }
  GradCheckOptions g;
  g.seed = o.seed.value_or(7);
  g.samples_per_tensor = o.samples;
  double worst = 0.0;
  for (Task t : tasks) {
    const GradCheckReport r = gradient_check(tiny_config(t), g);
    for (const auto& group : r.groups) {
      char line[160];
      std::snprintf(line, sizeof(line), "%s\t%s\tchecked=%zu\tskipped=%zu\t%.3e\n",
                    std::string(task_name(t)).c_str(), group.name.c_str(), group.checked, group.skipped,
                    group.max_rel_error);
      out << line;
    }
    out << task_name(t) << "\tattempts\t" << r.attempts << '\n';
    worst = std::max(worst, r.max_rel_error);
  }
  char line[64];
  std::snprintf(line, sizeof(line), "max_rel_error\t%.3e\n", worst);
  out << line;
  return worst < 1e-5 ? kExitOk : kExitFailure;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config_arg(o);
  if (o.grid.empty()) throw UsageError("--grid is required");
  std::vector<SweepAxis> grid;
  for (const auto& g : o.grid) grid.push_back(parse_sweep_axis(g));
  for (const auto& axis : grid) {
    RunConfig probe = cfg;
    for (const auto& v : axis.values) apply_config_value(probe, axis.key, v);
  }
  const auto train_set = load_dataset(load_manifest(cfg.train.train_manifest, Split::kTrain));
  const auto test_set = load_dataset(load_manifest(cfg.train.test_manifest, Split::kTest));
  const std::string table = format_sweep_table(sweep(cfg, grid, train_set, test_set), cfg.model.task);
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "sweep.tsv", table);
  out << table;
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"LRC-Net point-cloud toolkit", "lrcnet"};
  app.require_subcommand(1);

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "RNG seed (default 7)"); };
  auto add_threads = [&](CLI::App* c) {
    c->add_option("--threads", o.threads, "worker threads (default LRCNET_THREADS or all cores)");
  };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "output directory")->capture_default_str(); };
  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "run config file");
    c->add_option("--set", o.set, "override a config key (key=value)");
  };

  CLI::App* synth = app.add_subcommand("synth", "write a labeled synthetic dataset, manifests and run.cfg");
  synth->add_option("--task", o.task, "classify or segment")->capture_default_str();
  synth->add_option("--train", o.train_count, "training clouds")->capture_default_str();
  synth->add_option("--test", o.test_count, "test clouds")->capture_default_str();
  synth->add_option("--points", o.points, "points per cloud")->capture_default_str();
  synth->add_option("--noise", o.noise, "Gaussian noise sigma")->capture_default_str();
  add_seed(synth);
  add_out(synth);

  CLI::App* train_cmd = app.add_subcommand("train", "train from a config; writes checkpoints and metrics.tsv");
  add_config(train_cmd);
  add_seed(train_cmd);
  add_threads(train_cmd);
  add_out(train_cmd);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
  eval->add_option("--ckpt", o.ckpt, "checkpoint file");
  eval->add_option("--manifest", o.manifest, "dataset manifest (default: the run's test manifest)");
  add_threads(eval);

  CLI::App* segment = app.add_subcommand("segment", "write per-point part predictions as labeled XYZ");
  segment->add_option("--ckpt", o.ckpt, "checkpoint file");
  segment->add_option("--input", o.input, "an .xyz file or a manifest");
  segment->add_option("--category", o.category, "category of a single .xyz input");
  add_out(segment);

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference check on the tiny config");
  gradcheck->add_option("--task", o.gradcheck_task, "classify, segment or both")->capture_default_str();
  gradcheck->add_option("--samples", o.samples, "entries probed per parameter tensor")->capture_default_str();
  add_seed(gradcheck);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "train a config grid and print the ranked table");
  add_config(sweep_cmd);
  sweep_cmd->add_option("--grid", o.grid, "axis as key=v1,v2,... (repeatable)");
  add_seed(sweep_cmd);
  add_threads(sweep_cmd);
  add_out(sweep_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(o, out);
    if (*train_cmd) return cmd_train(o, out);
    if (*eval) return cmd_eval(o, out);
    if (*segment) return cmd_segment(o, out);
    if (*gradcheck) return cmd_gradcheck(o, out);
    return cmd_sweep(o, out);
  } catch (const UsageError& e) {
    err << "lrcnet: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "lrcnet: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace lrcnet
