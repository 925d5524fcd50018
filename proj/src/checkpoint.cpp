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

#include "lrcnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include <zlib.h>

#include "lrcnet/error.hpp"

namespace lrcnet {

namespace {

constexpr char kMagic[4] = {'L', 'R', 'C', 'N'};
constexpr std::string_view kStateHeader = "[state]\n";
constexpr std::string_view kMomentM = "adam.m/";
constexpr std::string_view kMomentV = "adam.v/";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(std::string_view name, const Shape& shape, std::span<const double> values) {
    str(name);
    u32(static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) u64(d);
    bytes(values.data(), values.size() * sizeof(double));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  const std::vector<std::uint8_t>& buffer() const { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    if (n > in_.size() - pos_) throw Error("checkpoint truncated");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  std::string str() {
    std::string s(u32(), '\0');
    bytes(s.data(), s.size());
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = crc32(crc, bytes.data() + pos, chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string real_text(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string state_text(const Checkpoint& c) {
  std::string s(kStateHeader);
  s += "epoch = " + std::to_string(c.epoch) + "\n";
  s += "adam_step = " + std::to_string(c.optimizer.step) + "\n";
  s += "adam_beta1 = " + real_text(c.optimizer.beta1) + "\n";
  s += "adam_beta2 = " + real_text(c.optimizer.beta2) + "\n";
  s += "adam_eps = " + real_text(c.optimizer.eps) + "\n";
  s += "rng_seed = " + std::to_string(c.rng_seed) + "\n";
  s += "rng_counter = " + std::to_string(c.rng_counter) + "\n";
  return s;
}

void parse_state(std::string_view text, Checkpoint& c) {
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    auto eq = line.find(" = ");
    if (eq == std::string_view::npos) throw Error("checkpoint: malformed state line");
    kv.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 3)));
  }
  auto get = [&](std::string_view key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error("checkpoint: state is missing " + std::string(key));
    return it->second;
  };
  try {
    c.epoch = std::stoull(get("epoch"));
    c.optimizer.step = std::stoull(get("adam_step"));
    c.optimizer.beta1 = std::stod(get("adam_beta1"));
    c.optimizer.beta2 = std::stod(get("adam_beta2"));
    c.optimizer.eps = std::stod(get("adam_eps"));
    c.rng_seed = std::stoull(get("rng_seed"));
    c.rng_counter = std::stoull(get("rng_counter"));
  } catch (const std::logic_error&) {
    throw Error("checkpoint: malformed state value");
  }
}

}  // namespace

Checkpoint make_checkpoint(const RunConfig& config, const Model& model, const AdamState& optimizer,
                           std::uint64_t epoch, const CounterRng& rng) {
  Checkpoint c;
  c.config = config;
  c.config.model = model.config();
  for (const auto& p : model.params().all()) c.params.push_back({p.name, p.shape, *p.value});
  c.optimizer = optimizer;
  c.epoch = epoch;
  c.rng_seed = rng.seed();
  c.rng_counter = rng.counter();
  return c;
}

Model model_from_checkpoint(const Checkpoint& checkpoint) {
  ParameterSet params;
  for (const auto& t : checkpoint.params) {
    auto& p = params.add(t.name, t.shape);
    if (p.value->size() != t.values.size()) throw Error("checkpoint: tensor " + t.name + " has the wrong size");
    *p.value = t.values;
  }
  return Model(checkpoint.config.model, std::move(params));
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  const bool has_moments = !c.optimizer.m.empty();
  if (has_moments && (c.optimizer.m.size() != c.params.size() || c.optimizer.v.size() != c.params.size())) {
    throw Error("checkpoint: optimizer state does not match parameters");
  }
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(c.version);
  w.str(serialize_run_config(c.config) + state_text(c));
  for (const auto& t : c.params) w.tensor(t.name, t.shape, t.values);
  if (has_moments) {
    for (std::size_t i = 0; i < c.params.size(); ++i) {
      w.tensor(std::string(kMomentM) + c.params[i].name, c.params[i].shape, c.optimizer.m[i]);
    }
    for (std::size_t i = 0; i < c.params.size(); ++i) {
      w.tensor(std::string(kMomentV) + c.params[i].name, c.params[i].shape, c.optimizer.v[i]);
    }
  }
  w.u32(crc32_of(w.buffer()));
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error("checkpoint: bad magic bytes (not an LRCN file)");
  }
  const auto body = bytes.first(bytes.size() - 4);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 4);
  if (crc32_of(body) != stored) throw Error("checkpoint: checksum mismatch (file corrupted or truncated)");

  Reader r(body);
  char magic[4];
  r.bytes(magic, 4);
  Checkpoint c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion) {
    throw Error("checkpoint: version " + std::to_string(c.version) + " is not supported (expected " +
                std::to_string(kCheckpointVersion) + ")");
  }
  const std::string text = r.str();
  const auto split = text.find(kStateHeader);
  if (split == std::string::npos) throw Error("checkpoint: missing state section");
  c.config = parse_run_config(std::string_view(text).substr(0, split), "<checkpoint>");
  parse_state(std::string_view(text).substr(split + kStateHeader.size()), c);

  std::map<std::string, std::vector<double>> m_by_name, v_by_name;
  while (!r.done()) {
    NamedTensor t;
    t.name = r.str();
    const auto rank = r.u32();
    for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(r.u64());
    t.values.resize(shape_numel(t.shape));
    r.bytes(t.values.data(), t.values.size() * sizeof(double));
    if (t.name.starts_with(kMomentM)) {
      m_by_name[t.name.substr(kMomentM.size())] = std::move(t.values);
    } else if (t.name.starts_with(kMomentV)) {
      v_by_name[t.name.substr(kMomentV.size())] = std::move(t.values);
    } else {
      c.params.push_back(std::move(t));
    }
  }
  if (!m_by_name.empty() || !v_by_name.empty()) {
    for (const auto& p : c.params) {
      auto m = m_by_name.find(p.name);
      auto v = v_by_name.find(p.name);
      if (m == m_by_name.end() || v == v_by_name.end()) {
        throw Error("checkpoint: optimizer state missing for " + p.name);
      }
      c.optimizer.m.push_back(std::move(m->second));
      c.optimizer.v.push_back(std::move(v->second));
    }
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace lrcnet
