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

#include "lrcnet/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "lrcnet/error.hpp"

namespace lrcnet {

Gradients zero_gradients(const ParameterSet& params) {
  Gradients g;
  g.reserve(params.size());
  for (const auto& p : params.all()) g.emplace_back(p.value->size(), 0.0);
  return g;
}

AdamState make_adam_state(const ParameterSet& params) {
  AdamState s;
  s.m = zero_gradients(params);
  s.v = zero_gradients(params);
  return s;
}

void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error("adam_step: gradient/state count does not match parameters");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& param = params.at(p);
    if (grads[p].size() != param.value->size() || state.m[p].size() != grads[p].size() ||
        state.v[p].size() != grads[p].size()) {
      throw Error("adam_step: shape mismatch for " + param.name);
    }
    for (double g : grads[p]) {
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient for " + param.name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& w = *params.at(p).value;
    auto& m = state.m[p];
    auto& v = state.v[p];
    const auto& g = grads[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double lr_schedule(std::size_t epoch, const TrainConfig& config) {
  const std::size_t step = std::max<std::size_t>(config.lr_step, 1);
  const double lr = config.lr * std::pow(config.lr_decay, static_cast<double>(epoch / step));
  return std::max(lr, config.lr_floor);
}

}  // namespace lrcnet
