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


#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "lrcnet/checkpoint.hpp"
#include "lrcnet/cli.hpp"
#include "lrcnet/config.hpp"
#include "lrcnet/dataio.hpp"
#include "lrcnet/error.hpp"
#include "test_util.hpp"

using namespace lrcnet;
using lrcnet::testing::read_file;
using lrcnet::testing::scratch_dir;
using lrcnet::testing::write_file;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lrcnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// A tiny-model dataset with a run.cfg next to it.
std::filesystem::path tiny_dataset(const std::filesystem::path& dir, const std::string& task, int train,
                                   int test) {
  const CliRun r = cli({"synth", "--out", dir.string(), "--task", task, "--train", std::to_string(train), "--test",
                        std::to_string(test), "--points", "64", "--seed", "5"});
  REQUIRE(r.code == 0);
  RunConfig cfg = load_run_config(dir / "run.cfg");
  cfg.model = tiny_config(task == "segment" ? Task::kSegment : Task::kClassify);
  cfg.train.threads = 1;
  std::string text = serialize_run_config(cfg);
  const auto a = text.find("train_manifest = "), b = text.find('\n', a);
  text.replace(a, b - a, "train_manifest = train.txt");
  const auto c = text.find("test_manifest = "), d = text.find('\n', c);
  text.replace(c, d - c, "test_manifest = test.txt");
  write_file(dir / "tiny.cfg", text);
  return dir / "tiny.cfg";
}

}  // namespace

TEST_CASE("run config parse and serialize form a fixed point") {
  RunConfig cfg;
  cfg.model = full_scale_config();
  cfg.model.gamma = 0.1;
  cfg.model.aggregation = Aggregation::kConcat;
  cfg.model.global_pool = GlobalPool::kSum;
  cfg.train.lr = 3e-4;
  cfg.train.train_manifest = "/data/train.txt";
  const std::string text = serialize_run_config(cfg);
  const RunConfig back = parse_run_config(text);
  CHECK(serialize_run_config(back) == text);
  CHECK(back.model.gamma == 0.1);
  CHECK(back.model.scales == cfg.model.scales);
  CHECK(back.train.lr == 3e-4);
  CHECK(back.model.aggregation == Aggregation::kConcat);
}

TEST_CASE("run config rejects bad input") {
  CHECK_THROWS_AS(parse_run_config("bogus = 1\n"), Error);
  CHECK_THROWS_AS(parse_run_config("gamma = 1\ngamma = 2\n"), ParseError);
  CHECK_THROWS_AS(parse_run_config("gamma 1\n"), ParseError);
  CHECK_THROWS_AS(parse_run_config("gamma = abc\n"), Error);
  CHECK_THROWS_AS(parse_run_config("scales = 8,4\n"), Error);
  CHECK_THROWS_AS(parse_run_config("precision = f32\n"), Error);
  const RunConfig c = parse_run_config("# comment\nscales = 4,8\n\nnum_centroids = 8\n");
  CHECK(c.model.filter_kinds == 2);
  CHECK(parse_run_config("aggregation = con\n").model.aggregation == Aggregation::kConcat);
  CHECK(parse_run_config("aggregation = all\n").model.aggregation == Aggregation::kIntraConv);
  const RunConfig rel = parse_run_config("train_manifest = a/t.txt\n", "x", "/base");
  CHECK(rel.train.train_manifest == std::filesystem::path("/base/a/t.txt"));
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"train", "--bogus"}).code == kExitUsage);
  const CliRun missing = cli({"train", "--config", "missing.cfg"});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("missing.cfg") != std::string::npos);
  CHECK(missing.out.empty());
  CHECK(cli({"train"}).code == kExitUsage);
  CHECK(cli({"sweep", "--config", "missing.cfg", "--grid", "gamma=1"}).code == kExitUsage);
  CHECK(cli({"eval", "--ckpt", "nope.ckpt"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("runtime failures exit with 1") {
  const auto dir = scratch_dir("cli_runtime");
  write_file(dir / "bad.cfg", "gamma = 1\ngamma = 2\n");
  const CliRun r = cli({"train", "--config", (dir / "bad.cfg").string()});
  CHECK(r.code == kExitFailure);
  CHECK(r.err.find("duplicate") != std::string::npos);
  write_file(dir / "junk.ckpt", "not a checkpoint");
  CHECK(cli({"eval", "--ckpt", (dir / "junk.ckpt").string()}).code == kExitFailure);
}

TEST_CASE("synth writes a dataset and config") {
  const auto dir = scratch_dir("cli_synth");
  const CliRun r = cli({"synth", "--out", dir.string(), "--task", "segment", "--train", "4", "--test", "2",
                        "--points", "32"});
  REQUIRE(r.code == 0);
  const RunConfig cfg = load_run_config(dir / "run.cfg");
  CHECK(cfg.model.task == Task::kSegment);
  const auto train = load_dataset(load_manifest(cfg.train.train_manifest));
  REQUIRE(train.size() == 4);
  CHECK(train[0].class_id == 0);
  CHECK(train[1].class_id == 1);
  for (int l : *train[1].labels) CHECK((l == 3 || l == 4));
  CHECK(load_dataset(load_manifest(cfg.train.test_manifest)).size() == 2);
}

TEST_CASE("train is reproducible and eval reports metrics") {
  const auto dir = scratch_dir("cli_train");
  const auto cfg = tiny_dataset(dir / "data", "classify", 12, 4);
  const auto a = dir / "a", b = dir / "b";
  const CliRun ra = cli({"train", "--config", cfg.string(), "--out", a.string(), "--set", "epochs=2"});
  REQUIRE(ra.code == 0);
  const CliRun rb = cli({"train", "--config", cfg.string(), "--out", b.string(), "--set", "epochs=2"});
  REQUIRE(rb.code == 0);
  const std::string log = read_file(a / "metrics.tsv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);
  CHECK(log == read_file(b / "metrics.tsv"));
  CHECK(read_file(a / "best.ckpt") == read_file(b / "best.ckpt"));
  CHECK(read_file(a / "last.ckpt") == read_file(b / "last.ckpt"));

  const CliRun seeded = cli({"train", "--config", cfg.string(), "--out", (dir / "c").string(), "--set", "epochs=2",
                             "--seed", "8"});
  REQUIRE(seeded.code == 0);
  CHECK(load_checkpoint(dir / "c" / "last.ckpt").config.train.seed == 8);
  CHECK(read_file(dir / "c" / "last.ckpt") != read_file(a / "last.ckpt"));

  const CliRun ev = cli({"eval", "--ckpt", (a / "best.ckpt").string()});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("accuracy\t") != std::string::npos);
  CHECK(ev.out.find("total\t4\n") != std::string::npos);
}

TEST_CASE("eval of a memorizing checkpoint on its own train split scores 1") {
  const auto dir = scratch_dir("cli_memorize");
  const auto cfg = tiny_dataset(dir / "data", "classify", 8, 2);
  const auto train_manifest = (dir / "data" / "train.txt").string();
  const CliRun r = cli({"train", "--config", cfg.string(), "--out", (dir / "run").string(), "--set", "epochs=200",
                        "--set", "target_metric=1", "--set", "test_manifest=" + train_manifest, "--set",
                        "dropout=0", "--set", "batch_size=8", "--set", "lr=0.003", "--set", "lr_step=1000"});
  REQUIRE(r.code == 0);
  const CliRun ev = cli({"eval", "--ckpt", (dir / "run" / "best.ckpt").string(), "--manifest", train_manifest});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("accuracy\t1.000000\n") != std::string::npos);
}

TEST_CASE("segment writes one labeled point per input point") {
  const auto dir = scratch_dir("cli_segment");
  const auto cfg = tiny_dataset(dir / "data", "segment", 4, 2);
  REQUIRE(cli({"train", "--config", cfg.string(), "--out", (dir / "run").string(), "--set", "epochs=1"}).code == 0);
  const auto ckpt = (dir / "run" / "best.ckpt").string();

  const CliRun many = cli({"segment", "--ckpt", ckpt, "--input", (dir / "data" / "test.txt").string(), "--out",
                           (dir / "pred").string()});
  REQUIRE(many.code == 0);
  const auto inputs = load_dataset(load_manifest(dir / "data" / "test.txt"));
  const PointCloud first = load_xyz(dir / "pred" / "0000_0000.xyz");
  CHECK(first.size() == inputs[0].size());
  CHECK(first.coords == inputs[0].coords);
  REQUIRE(first.labels.has_value());
  for (int l : *first.labels) CHECK((l >= 0 && l <= 2));
  const PointCloud second = load_xyz(dir / "pred" / "0001_0001.xyz");
  for (int l : *second.labels) CHECK((l == 3 || l == 4));

  const CliRun single = cli({"segment", "--ckpt", ckpt, "--input", (dir / "data" / "test" / "0000.xyz").string(),
                             "--out", (dir / "one").string()});
  REQUIRE(single.code == 0);
  CHECK(load_xyz(dir / "one" / "0000.xyz").size() == inputs[0].size());

  const CliRun wrong = cli({"segment", "--ckpt", ckpt, "--input", (dir / "nothing.xyz").string()});
  CHECK(wrong.code == kExitUsage);
}

TEST_CASE("gradcheck passes on the tiny config") {
  const CliRun r = cli({"gradcheck", "--task", "classify", "--samples", "4"});
  CHECK(r.code == 0);
  CHECK(r.out.find("max_rel_error\t") != std::string::npos);
}

TEST_CASE("sweep prints a ranked table") {
  const auto dir = scratch_dir("cli_sweep");
  const auto cfg = tiny_dataset(dir / "data", "classify", 6, 4);
  const CliRun r = cli({"sweep", "--config", cfg.string(), "--grid", "gamma=0,1", "--set", "epochs=1", "--out",
                        (dir / "out").string()});
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);
  CHECK(read_file(dir / "out" / "sweep.tsv") == r.out);
  CHECK(cli({"sweep", "--config", cfg.string()}).code == kExitUsage);
  CHECK(cli({"sweep", "--config", cfg.string(), "--grid", "bogus=1"}).code == kExitFailure);
}
