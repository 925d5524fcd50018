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

#include "lrcnet/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "lrcnet/error.hpp"

namespace lrcnet {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// ModelConfig

int ModelConfig::num_parts() const {
  return std::accumulate(parts_per_category.begin(), parts_per_category.end(), 0);
}

std::vector<int> ModelConfig::part_offsets() const {
  std::vector<int> offsets;
  int acc = 0;
  for (int p : parts_per_category) {
    offsets.push_back(acc);
    acc += p;
  }
  return offsets;
}

std::size_t ModelConfig::aggregated_dim() const {
  return aggregation == Aggregation::kConcat ? region_dim * num_scales() : region_dim;
}

void ModelConfig::validate() const {
  if (scales.empty()) throw Error("config: scales must not be empty");
  for (std::size_t t = 0; t < scales.size(); ++t) {
    if (scales[t] < 1 || (t > 0 && scales[t] <= scales[t - 1])) {
      throw Error("config: scales must be positive and strictly increasing");
    }
  }
  if (num_centroids < 1) throw Error("config: num_centroids must be >= 1");
  if (region_dim < 1) throw Error("config: region_dim must be >= 1");
  if (!(gamma >= 0.0)) throw Error("config: gamma must be >= 0");
  if (filter_kinds < 1 || filter_kinds > scales.size()) {
    throw Error("config: filter_kinds must lie in [1, number of scales]");
  }
  if (filter_kinds > region_dim) throw Error("config: filter_kinds must not exceed region_dim");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("config: dropout must lie in [0, 1)");
  if (precision != "f64") {
    throw Error("config: precision '" + precision + "' is not supported (only f64)");
  }
  if (global_widths.empty()) throw Error("config: global_widths must not be empty");
  auto positive = [](const std::vector<std::size_t>& v, const char* what) {
    for (auto w : v) {
      if (w < 1) throw Error(std::string("config: ") + what + " entries must be >= 1");
    }
  };
  positive(area_widths, "area_widths");
  positive(global_widths, "global_widths");
  positive(head_widths, "head_widths");
  positive(propagation_widths, "propagation_widths");
  positive(segment_widths, "segment_widths");
  if (task == Task::kClassify) {
    if (num_classes < 1) throw Error("config: num_classes must be >= 1");
  } else {
    if (parts_per_category.empty()) throw Error("config: parts_per_category must not be empty");
    for (int p : parts_per_category) {
      if (p < 1) throw Error("config: every category needs at least one part");
    }
    if (skip_dim < 1) throw Error("config: skip_dim must be >= 1");
  }
}

ModelConfig full_scale_config() {
  ModelConfig c;
  c.num_centroids = 384;
  c.scales = {16, 32, 64, 128};
  c.region_dim = 128;
  c.filter_kinds = 4;
  c.gamma = 1e4;
  return c;
}

ModelConfig tiny_config(Task task) {
  ModelConfig c;
  c.task = task;
  c.num_centroids = 8;
  c.scales = {4, 8};
  c.region_dim = 8;
  c.filter_kinds = 2;
  c.num_classes = 4;
  c.gamma = 1.0;
  return c;
}

std::string_view task_name(Task t) { return t == Task::kClassify ? "classify" : "segment"; }

std::string_view aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::kIntraConv: return "intra";
    case Aggregation::kMean: return "mean";
    case Aggregation::kMax: return "max";
    case Aggregation::kConcat: return "concat";
  }
  return "?";
}

std::string_view global_pool_name(GlobalPool p) {
  switch (p) {
    case GlobalPool::kMax: return "max";
    case GlobalPool::kMean: return "mean";
    case GlobalPool::kSum: return "sum";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  if (s == "classify") return Task::kClassify;
  if (s == "segment") return Task::kSegment;
  throw Error("unknown task '" + std::string(s) + "'");
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "intra" || s == "all") return Aggregation::kIntraConv;
  if (s == "mean") return Aggregation::kMean;
  if (s == "max") return Aggregation::kMax;
  if (s == "concat" || s == "con") return Aggregation::kConcat;
  throw Error("unknown aggregation '" + std::string(s) + "'");
}

GlobalPool parse_global_pool(std::string_view s) {
  if (s == "max") return GlobalPool::kMax;
  if (s == "mean") return GlobalPool::kMean;
  if (s == "sum") return GlobalPool::kSum;
  throw Error("unknown global pool '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// RunConfig text format

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(std::string_view v) {
  double out = 0.0;
  auto s = v;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || std::isnan(out)) {
    throw Error("'" + std::string(v) + "' is not a real number");
  }
  return out;
}

template <typename Int>
Int to_int(std::string_view v) {
  Int out{};
  auto s = v;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error("'" + std::string(v) + "' is not an integer");
  }
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw Error("'" + std::string(v) + "' is not a boolean");
}

template <typename Int>
std::vector<Int> to_list(std::string_view v) {
  std::vector<Int> out;
  if (trim(v).empty()) return out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    auto comma = v.find(',', pos);
    if (comma == std::string_view::npos) comma = v.size();
    out.push_back(to_int<Int>(trim(v.substr(pos, comma - pos))));
    pos = comma + 1;
  }
  return out;
}

std::string real_text(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename T>
std::string list_text(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

fs::path to_path(std::string_view v, const fs::path& base) {
  if (v.empty()) return {};
  fs::path p{std::string(v)};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view, const fs::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      {"task", [](RunConfig& c, std::string_view v, const fs::path&) { c.model.task = parse_task(v); },
       [](const RunConfig& c) { return std::string(task_name(c.model.task)); }},
      {"num_centroids",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.num_centroids = to_int<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.model.num_centroids); }},
      {"scales",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.scales = to_list<std::size_t>(v); },
       [](const RunConfig& c) { return list_text(c.model.scales); }},
      {"region_dim",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.region_dim = to_int<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.model.region_dim); }},
      {"gamma", [](RunConfig& c, std::string_view v, const fs::path&) { c.model.gamma = to_real(v); },
       [](const RunConfig& c) { return real_text(c.model.gamma); }},
      {"filter_kinds",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.filter_kinds = to_int<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.model.filter_kinds); }},
      {"num_classes",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.num_classes = to_int<int>(v); },
       [](const RunConfig& c) { return std::to_string(c.model.num_classes); }},
      {"parts_per_category",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.parts_per_category = to_list<int>(v); },
       [](const RunConfig& c) { return list_text(c.model.parts_per_category); }},
      {"aggregation",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.aggregation = parse_aggregation(v); },
       [](const RunConfig& c) { return std::string(aggregation_name(c.model.aggregation)); }},
      {"inter_region",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.inter_region = to_bool(v); },
       [](const RunConfig& c) { return std::string(c.model.inter_region ? "true" : "false"); }},
      {"global_pool",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.global_pool = parse_global_pool(v); },
       [](const RunConfig& c) { return std::string(global_pool_name(c.model.global_pool)); }},
      {"dropout", [](RunConfig& c, std::string_view v, const fs::path&) { c.model.dropout = to_real(v); },
       [](const RunConfig& c) { return real_text(c.model.dropout); }},
      {"precision", [](RunConfig& c, std::string_view v, const fs::path&) { c.model.precision = std::string(v); },
       [](const RunConfig& c) { return c.model.precision; }},
      {"area_widths",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.area_widths = to_list<std::size_t>(v); },
       [](const RunConfig& c) { return list_text(c.model.area_widths); }},
      {"global_widths",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.global_widths = to_list<std::size_t>(v); },
       [](const RunConfig& c) { return list_text(c.model.global_widths); }},
      {"head_widths",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.head_widths = to_list<std::size_t>(v); },
       [](const RunConfig& c) { return list_text(c.model.head_widths); }},
      {"skip_dim",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.skip_dim = to_int<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.model.skip_dim); }},
      {"propagation_widths",
       [](RunConfig& c, std::string_view v, const fs::path&) {
         c.model.propagation_widths = to_list<std::size_t>(v);
       },
       [](const RunConfig& c) { return list_text(c.model.propagation_widths); }},
      {"segment_widths",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.model.segment_widths = to_list<std::size_t>(v); },
       [](const RunConfig& c) { return list_text(c.model.segment_widths); }},
      {"epochs", [](RunConfig& c, std::string_view v, const fs::path&) { c.train.epochs = to_int<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train.epochs); }},
      {"batch_size",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.train.batch_size = to_int<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train.batch_size); }},
      {"lr", [](RunConfig& c, std::string_view v, const fs::path&) { c.train.lr = to_real(v); },
       [](const RunConfig& c) { return real_text(c.train.lr); }},
      {"lr_decay", [](RunConfig& c, std::string_view v, const fs::path&) { c.train.lr_decay = to_real(v); },
       [](const RunConfig& c) { return real_text(c.train.lr_decay); }},
      {"lr_step",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.train.lr_step = to_int<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train.lr_step); }},
      {"lr_floor", [](RunConfig& c, std::string_view v, const fs::path&) { c.train.lr_floor = to_real(v); },
       [](const RunConfig& c) { return real_text(c.train.lr_floor); }},
      {"train_manifest",
       [](RunConfig& c, std::string_view v, const fs::path& base) { c.train.train_manifest = to_path(v, base); },
       [](const RunConfig& c) { return c.train.train_manifest.generic_string(); }},
      {"test_manifest",
       [](RunConfig& c, std::string_view v, const fs::path& base) { c.train.test_manifest = to_path(v, base); },
       [](const RunConfig& c) { return c.train.test_manifest.generic_string(); }},
      {"seed", [](RunConfig& c, std::string_view v, const fs::path&) { c.train.seed = to_int<std::uint64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train.seed); }},
      {"threads",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.train.threads = to_int<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.train.threads); }},
      {"target_metric",
       [](RunConfig& c, std::string_view v, const fs::path&) { c.train.target_metric = to_real(v); },
       [](const RunConfig& c) { return real_text(c.train.target_metric); }},
      {"normalize", [](RunConfig& c, std::string_view v, const fs::path&) { c.train.normalize = to_bool(v); },
       [](const RunConfig& c) { return std::string(c.train.normalize ? "true" : "false"); }},
  };
  return kFields;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  throw Error("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void apply_config_value(RunConfig& config, std::string_view key, std::string_view value,
                        const fs::path& base_dir) {
  find_field(trim(key)).set(config, trim(value), base_dir);
}

RunConfig parse_run_config(std::string_view text, const std::string& source, const fs::path& base_dir) {
  RunConfig config;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(source, lineno, "expected \"key = value\"");
      const std::string key(trim(line.substr(0, eq)));
      if (!seen.insert(key).second) throw ParseError(source, lineno, "duplicate key '" + key + "'");
      try {
        apply_config_value(config, key, line.substr(eq + 1), base_dir);
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ParseError(source, lineno, e.what());
      }
    }
    if (end == text.size()) break;
  }
  if (!seen.count("filter_kinds")) config.model.filter_kinds = config.model.scales.size();
  config.model.validate();
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string(), fs::absolute(path).parent_path());
}

std::string serialize_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(config);
    out += '\n';
  }
  return out;
}

}  // namespace lrcnet
