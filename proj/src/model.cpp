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

#include "lrcnet/model.hpp"

#include <cmath>
#include <unordered_map>

#include "lrcnet/error.hpp"
#include "lrcnet/geometry.hpp"
#include "lrcnet/layers.hpp"

namespace lrcnet {

Parameter& ParameterSet::add(std::string name, Shape shape) {
  for (const auto& p : params_) {
    if (p.name == name) throw Error("duplicate parameter name " + name);
  }
  auto storage = std::make_shared<std::vector<double>>(shape_numel(shape), 0.0);
  params_.push_back({std::move(name), std::move(shape), std::move(storage)});
  return params_.back();
}

const Parameter& ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p;
  }
  throw Error("no parameter named " + std::string(name));
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value->size();
  return n;
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& p : params_) {
    out.params_.push_back({p.name, p.shape, std::make_shared<std::vector<double>>(*p.value)});
  }
  return out;
}

namespace {

void add_dense_stack(std::vector<std::pair<std::string, Shape>>& out, const std::string& prefix,
                     std::size_t in, const std::vector<std::size_t>& widths) {
  for (std::size_t i = 0; i < widths.size(); ++i) {
    out.push_back({prefix + ".l" + std::to_string(i) + ".W", {in, widths[i]}});
    out.push_back({prefix + ".l" + std::to_string(i) + ".b", {widths[i]}});
    in = widths[i];
  }
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<std::pair<std::string, Shape>> Model::layout(const ModelConfig& c) {
  c.validate();
  std::vector<std::pair<std::string, Shape>> out;
  auto area = c.area_widths;
  area.push_back(c.region_dim);
  for (std::size_t t = 0; t < c.num_scales(); ++t) add_dense_stack(out, "area.s" + std::to_string(t), 3, area);
  if (c.aggregation == Aggregation::kIntraConv) {
    const auto counts = filters_per_kind(c.region_dim, c.filter_kinds);
    for (std::size_t h = 1; h <= c.filter_kinds; ++h) {
      out.push_back({"intra.h" + std::to_string(h) + ".W", {h * c.region_dim, counts[h - 1]}});
      out.push_back({"intra.h" + std::to_string(h) + ".b", {counts[h - 1]}});
    }
  }
  add_dense_stack(out, "global", c.aggregated_dim(), c.global_widths);
  const std::size_t g = c.global_widths.back();
  if (c.task == Task::kClassify) {
    auto head = c.head_widths;
    head.push_back(static_cast<std::size_t>(c.num_classes));
    add_dense_stack(out, "head", g, head);
  } else {
    out.push_back({"skip.W", {3, c.skip_dim}});
    out.push_back({"skip.b", {c.skip_dim}});
    add_dense_stack(out, "prop", c.aggregated_dim() + g, c.propagation_widths);
    const std::size_t prop_out = c.propagation_widths.empty() ? c.aggregated_dim() + g : c.propagation_widths.back();
    auto seg = c.segment_widths;
    seg.push_back(static_cast<std::size_t>(c.num_parts()));
    add_dense_stack(out, "seg", prop_out + c.skip_dim, seg);
  }
  return out;
}

Model::Model(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  CounterRng rng(init_seed);
  for (auto& [name, shape] : layout(config_)) {
    auto& p = params_.add(name, shape);
    if (ends_with(name, ".b")) continue;
    // Fan-in scaled uniform init.
    const double bound = std::sqrt(6.0 / static_cast<double>(shape[0]));
    for (double& v : *p.value) v = rng.uniform(-bound, bound);
  }
}

Model::Model(ModelConfig config, ParameterSet params) : config_(std::move(config)), params_(std::move(params)) {
  const auto expected = layout(config_);
  if (expected.size() != params_.size()) {
    throw Error("parameter count " + std::to_string(params_.size()) + " does not match layout (" +
                std::to_string(expected.size()) + ")");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& p = params_.at(i);
    if (p.name != expected[i].first || p.shape != expected[i].second) {
      throw Error("parameter " + p.name + shape_string(p.shape) + " does not match layout entry " +
                  expected[i].first + shape_string(expected[i].second));
    }
  }
}

ForwardResult Model::forward(Tape& tape, const PointCloud& cloud, Mode mode, CounterRng* rng,
                             bool track_grad) const {
  const auto& c = config_;
  validate_cloud(cloud);
  const std::size_t n = cloud.size();
  const std::size_t m = c.num_centroids;
  if (n < c.scales.back() || n < m) {
    throw Error("insufficient points: N=" + std::to_string(n) + " but the config needs at least " +
                std::to_string(std::max(c.scales.back(), m)));
  }
  if (mode == Mode::kTrain && !rng) throw Error("train-mode forward needs an RNG");

  ForwardResult out;
  std::unordered_map<std::string, std::size_t> by_name;
  out.leaves.reserve(params_.size());
  for (const auto& p : params_.all()) {
    by_name.emplace(p.name, out.leaves.size());
    out.leaves.push_back(Tensor::wrap(p.shape, p.value, track_grad));
  }
  auto leaf = [&](const std::string& name) -> const Tensor& { return out.leaves.at(by_name.at(name)); };
  auto dense = [&](const std::string& prefix, std::size_t count) {
    std::vector<DenseParams> layers;
    for (std::size_t i = 0; i < count; ++i) {
      const auto base = prefix + ".l" + std::to_string(i);
      layers.push_back({leaf(base + ".W"), leaf(base + ".b")});
    }
    return layers;
  };

  std::string stage;
  try {
    stage = "sampling";
    const std::span<const Point3> pts = cloud.coords;
    const std::size_t start = mode == Mode::kTrain ? static_cast<std::size_t>(rng->below(n)) : 0;
    out.centroids = farthest_point_sampling(pts, m, start);
    const auto centroid_pts = gather_points(pts, out.centroids);

    stage = "grouping";
    const auto region = group_areas(pts, out.centroids, c.scales);
    const auto relative = to_relative(pts, region);

    stage = "area features";
    std::vector<Tensor> areas;
    for (std::size_t t = 0; t < c.num_scales(); ++t) {
      Tensor input = Tensor::from({m, c.scales[t], 3}, relative[t]);
      PointNetLayerParams area{dense("area.s" + std::to_string(t), c.area_widths.size() + 1)};
      areas.push_back(reshape(tape, pointnet_layer(tape, input, area), {m, 1, c.region_dim}));
    }
    Tensor stacked = areas.size() == 1 ? areas.front() : concat(tape, areas, 1);

    stage = "intra-region encoding";
    Tensor regions;
    if (c.aggregation == Aggregation::kIntraConv) {
      IntraConvParams conv;
      for (std::size_t h = 1; h <= c.filter_kinds; ++h) {
        const auto base = "intra.h" + std::to_string(h);
        conv.banks.push_back({leaf(base + ".W"), leaf(base + ".b")});
      }
      regions = intra_region_encode(tape, stacked, conv);
    } else {
      regions = aggregate_fallback(tape, stacked, c.aggregation);
    }

    if (c.inter_region) {
      stage = "inter-region encoding";
      const auto sim = similarity_matrix(pairwise_sqdist(centroid_pts), c.gamma);
      regions = inter_region_encode(tape, regions, sim);
    }

    stage = "global feature";
    PointNetLayerParams global{dense("global", c.global_widths.size())};
    Tensor g = global_pointnet(tape, regions, global, c.global_pool);

    if (c.task == Task::kClassify) {
      stage = "classification head";
      const auto head = dense("head", c.head_widths.size() + 1);
      out.logits = classification_head(tape, g, head, c.dropout, mode == Mode::kTrain ? rng : nullptr);
      return out;
    }

    stage = "feature propagation";
    const Tensor with_global[] = {regions, broadcast_rows(tape, g, m)};
    out.region_level = mlp_forward(tape, concat(tape, with_global, 1), dense("prop", c.propagation_widths.size()));
    const auto w = interp_weights(pts, centroid_pts, 3);
    out.interpolated = gather_weighted(tape, out.region_level, w.index, w.weight, w.k);

    // Skip features see coordinates relative to the cloud mean so the
    // per-point logits stay translation invariant.
    Point3 mean{0.0, 0.0, 0.0};
    for (const auto& p : pts) {
      for (int d = 0; d < 3; ++d) mean[d] += p[d];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    std::vector<double> centered(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
      for (int d = 0; d < 3; ++d) centered[i * 3 + d] = pts[i][d] - mean[d];
    }
    Tensor skip = relu(tape, linear(tape, Tensor::from({n, 3}, std::move(centered)), leaf("skip.W"), leaf("skip.b")));

    stage = "segmentation head";
    const Tensor per_point[] = {out.interpolated, skip};
    out.logits = mlp_forward(tape, concat(tape, per_point, 1), dense("seg", c.segment_widths.size() + 1), false);
    return out;
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " (stage: " + stage + ")");
  }
}

Tensor Model::predict(const PointCloud& cloud) const {
  Tape tape;
  return forward(tape, cloud, Mode::kEval, nullptr, false).logits;
}

int argmax_class(const Tensor& logits) {
  const auto v = logits.data();
  if (v.empty()) throw Error("argmax of empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<int> argmax_parts(const Tensor& logits, int first, int count) {
  if (logits.rank() != 2) throw Error("argmax_parts: expected [N, P] logits");
  const std::size_t rows = logits.dim(0), parts = logits.dim(1);
  const std::size_t lo = count > 0 ? static_cast<std::size_t>(first) : 0;
  const std::size_t hi = count > 0 ? lo + static_cast<std::size_t>(count) : parts;
  if (hi > parts || lo >= hi) throw Error("argmax_parts: part range outside logits");
  std::vector<int> labels(rows);
  const auto v = logits.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = lo;
    for (std::size_t p = lo + 1; p < hi; ++p) {
      if (v[r * parts + p] > v[r * parts + best]) best = p;
    }
    labels[r] = static_cast<int>(best);
  }
  return labels;
}

}  // namespace lrcnet
