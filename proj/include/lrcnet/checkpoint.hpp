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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lrcnet/config.hpp"
#include "lrcnet/model.hpp"
#include "lrcnet/optimizer.hpp"
#include "lrcnet/rng.hpp"

namespace lrcnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

/// Everything needed to resume or evaluate a run.
///
/// File layout (all integers little-endian):
///   "LRCN" | u32 version | u32 text length | UTF-8 text
///   | records: u32 name length, name, u32 rank, u64 dims[rank], f64 payload
///   | u32 CRC-32 of every preceding byte
/// The text is the run config followed by a "[state]" section holding the
/// epoch, Adam step and RNG state. Parameters are stored under their own
/// names, Adam moments under "adam.m/<name>" and "adam.v/<name>".
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  RunConfig config;
  std::vector<NamedTensor> params;
  AdamState optimizer;
  std::uint64_t epoch = 0;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_counter = 0;
};

Checkpoint make_checkpoint(const RunConfig& config, const Model& model, const AdamState& optimizer,
                           std::uint64_t epoch, const CounterRng& rng);
Model model_from_checkpoint(const Checkpoint& checkpoint);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
/// Throws on bad magic, checksum failure, version mismatch or truncation.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lrcnet
