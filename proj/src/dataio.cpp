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

#include "lrcnet/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "lrcnet/error.hpp"
#include "lrcnet/rng.hpp"

namespace lrcnet {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Splits on spaces/tabs/CR, dropping anything after '#'.
std::vector<std::string_view> tokenize(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    f(text.substr(pos, end - pos), lineno);
    if (end == text.size()) break;
    pos = end + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
  const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
  const double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
  const double cx = uy * vz - uz * vy;
  const double cy = uz * vx - ux * vz;
  const double cz = ux * vy - uy * vx;
  return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

Point3 unit_sphere_point(CounterRng& rng) {
  for (;;) {
    const double x = rng.normal(), y = rng.normal(), z = rng.normal();
    const double r = std::sqrt(x * x + y * y + z * z);
    if (r > 1e-12) return {x / r, y / r, z / r};
  }
}

}  // namespace

void validate_cloud(const PointCloud& cloud, int num_parts) {
  if (cloud.coords.empty()) throw Error("point cloud is empty");
  for (const auto& p : cloud.coords) {
    for (double v : p) {
      if (!std::isfinite(v)) throw Error("point cloud has a non-finite coordinate");
    }
  }
  if (cloud.labels) {
    if (cloud.labels->size() != cloud.coords.size()) {
      throw Error("label count " + std::to_string(cloud.labels->size()) +
                  " does not match point count " + std::to_string(cloud.coords.size()));
    }
    if (num_parts > 0) {
      for (int l : *cloud.labels) {
        if (l < 0 || l >= num_parts) {
          throw Error("part label " + std::to_string(l) + " outside [0, " +
                      std::to_string(num_parts) + ")");
        }
      }
    }
  }
}

PointCloud parse_xyz(std::string_view text, const std::string& source) {
  PointCloud cloud;
  std::vector<int> labels;
  std::size_t columns = 0;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    auto fields = tokenize(line);
    if (fields.empty()) return;
    if (fields.size() != 3 && fields.size() != 4) {
      throw ParseError(source, lineno, "expected 3 or 4 fields, got " + std::to_string(fields.size()));
    }
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) {
      throw ParseError(source, lineno, "inconsistent column count");
    }
    Point3 p{};
    for (std::size_t i = 0; i < 3; ++i) {
      if (!parse_double(fields[i], p[i])) {
        throw ParseError(source, lineno, "invalid coordinate '" + std::string(fields[i]) + "'");
      }
    }
    cloud.coords.push_back(p);
    if (columns == 4) {
      int label = 0;
      if (!parse_int(fields[3], label) || label < 0) {
        throw ParseError(source, lineno, "invalid label '" + std::string(fields[3]) + "'");
      }
      labels.push_back(label);
    }
  });
  if (cloud.coords.empty()) throw Error(source + ": no points");
  if (columns == 4) cloud.labels = std::move(labels);
  return cloud;
}

PointCloud load_xyz(const fs::path& path) { return parse_xyz(read_file(path), path.string()); }

void save_xyz(const fs::path& path, const PointCloud& cloud) {
  validate_cloud(cloud);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  char buf[128];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.coords[i];
    int n = std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", p[0], p[1], p[2]);
    out.write(buf, n);
    if (cloud.labels) out << ' ' << (*cloud.labels)[i];
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

TriangleMesh parse_off(std::string_view text, const std::string& source) {
  TriangleMesh mesh;
  enum class Stage { kHeader, kCounts, kVertices, kFaces, kDone } stage = Stage::kHeader;
  std::size_t nv = 0, nf = 0;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    auto fields = tokenize(line);
    if (fields.empty()) return;
    switch (stage) {
      case Stage::kHeader:
        if (fields[0] != "OFF") throw ParseError(source, lineno, "missing OFF header");
        stage = Stage::kCounts;
        // Some writers put the counts on the header line.
        if (fields.size() == 1) return;
        fields.erase(fields.begin());
        [[fallthrough]];
      case Stage::kCounts:
        if (fields.size() < 2 || !parse_int(fields[0], nv) || !parse_int(fields[1], nf)) {
          throw ParseError(source, lineno, "expected vertex and face counts");
        }
        stage = nv > 0 ? Stage::kVertices : (nf > 0 ? Stage::kFaces : Stage::kDone);
        return;
      case Stage::kVertices: {
        if (fields.size() < 3) throw ParseError(source, lineno, "vertex needs 3 coordinates");
        Point3 p{};
        for (std::size_t i = 0; i < 3; ++i) {
          if (!parse_double(fields[i], p[i])) throw ParseError(source, lineno, "invalid vertex coordinate");
        }
        mesh.vertices.push_back(p);
        if (mesh.vertices.size() == nv) stage = nf > 0 ? Stage::kFaces : Stage::kDone;
        return;
      }
      case Stage::kFaces: {
        std::size_t k = 0;
        if (!parse_int(fields[0], k) || k < 3 || fields.size() < k + 1) {
          throw ParseError(source, lineno, "malformed face record");
        }
        std::vector<std::int64_t> idx(k);
        for (std::size_t i = 0; i < k; ++i) {
          if (!parse_int(fields[i + 1], idx[i]) || idx[i] < 0 ||
              static_cast<std::size_t>(idx[i]) >= nv) {
            throw ParseError(source, lineno, "face index out of range");
          }
        }
        for (std::size_t i = 1; i + 1 < k; ++i) mesh.faces.push_back({idx[0], idx[i], idx[i + 1]});
        if (--nf == 0) stage = Stage::kDone;
        return;
      }
      case Stage::kDone:
        throw ParseError(source, lineno, "unexpected trailing data");
    }
  });
  if (stage != Stage::kDone) throw Error(source + ": truncated OFF file");
  return mesh;
}

TriangleMesh load_off(const fs::path& path) { return parse_off(read_file(path), path.string()); }

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error("sample_mesh: n must be >= 1");
  std::vector<double> cumulative;
  cumulative.reserve(mesh.faces.size());
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    for (auto i : f) {
      if (i < 0 || static_cast<std::size_t>(i) >= mesh.vertices.size()) {
        throw Error("sample_mesh: face references a missing vertex");
      }
    }
    total += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw Error("sample_mesh: mesh has zero surface area");

  CounterRng rng(seed);
  PointCloud cloud;
  cloud.coords.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& f = mesh.faces[static_cast<std::size_t>(it - cumulative.begin())];
    const double su = std::sqrt(rng.uniform());
    const double v = rng.uniform();
    const double wa = 1.0 - su, wb = su * (1.0 - v), wc = su * v;
    const auto& a = mesh.vertices[f[0]];
    const auto& b = mesh.vertices[f[1]];
    const auto& c = mesh.vertices[f[2]];
    cloud.coords.push_back({wa * a[0] + wb * b[0] + wc * c[0], wa * a[1] + wb * b[1] + wc * c[1],
                            wa * a[2] + wb * b[2] + wc * c[2]});
  }
  return cloud;
}

ShapeKind parse_shape_kind(std::string_view name) {
  if (name == "sphere") return ShapeKind::kSphere;
  if (name == "cube") return ShapeKind::kCube;
  if (name == "cylinder") return ShapeKind::kCylinder;
  if (name == "twin_spheres") return ShapeKind::kTwinSpheres;
  throw Error("unknown shape kind '" + std::string(name) + "'");
}

std::string_view shape_kind_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kCube: return "cube";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kTwinSpheres: return "twin_spheres";
  }
  return "?";
}

int shape_kind_parts(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kCylinder: return 3;
    case ShapeKind::kTwinSpheres: return 2;
    default: return 0;
  }
}

PointCloud gen_synthetic(ShapeKind kind, std::size_t n, double noise_sigma, std::uint64_t seed,
                         const SyntheticShapes& shapes) {
  if (n < 8) throw Error("gen_synthetic: n must be >= 8");
  if (!(noise_sigma >= 0.0)) throw Error("gen_synthetic: noise_sigma must be >= 0");
  CounterRng rng(seed);
  PointCloud cloud;
  cloud.class_id = static_cast<int>(kind);
  cloud.coords.reserve(n);
  std::vector<int> labels;
  const double two_pi = 2.0 * std::numbers::pi;

  switch (kind) {
    case ShapeKind::kSphere:
      for (std::size_t i = 0; i < n; ++i) cloud.coords.push_back(unit_sphere_point(rng));
      break;
    case ShapeKind::kCube:
      for (std::size_t i = 0; i < n; ++i) {
        const auto face = rng.below(6);
        const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
        const double s = (face & 1) ? 1.0 : -1.0;
        switch (face / 2) {
          case 0: cloud.coords.push_back({s, a, b}); break;
          case 1: cloud.coords.push_back({a, s, b}); break;
          default: cloud.coords.push_back({a, b, s}); break;
        }
      }
      break;
    case ShapeKind::kCylinder: {
      const double r = shapes.cylinder_radius, half = 0.5 * shapes.cylinder_height;
      const double side = two_pi * r * shapes.cylinder_height;
      const double cap = std::numbers::pi * r * r;
      for (std::size_t i = 0; i < n; ++i) {
        const double pick = rng.uniform() * (side + 2.0 * cap);
        const double theta = two_pi * rng.uniform();
        if (pick < side) {
          const double z = rng.uniform(-half, half);
          cloud.coords.push_back({r * std::cos(theta), r * std::sin(theta), z});
          labels.push_back(0);
        } else {
          const double rho = r * std::sqrt(rng.uniform());
          const bool top = pick < side + cap;
          cloud.coords.push_back({rho * std::cos(theta), rho * std::sin(theta), top ? half : -half});
          labels.push_back(top ? 1 : 2);
        }
      }
      break;
    }
    case ShapeKind::kTwinSpheres: {
      const double r = shapes.twin_radius;
      const double offset = r + 0.5 * shapes.twin_gap;
      const std::size_t first = (n + 1) / 2;
      for (std::size_t i = 0; i < n; ++i) {
        auto p = unit_sphere_point(rng);
        const bool a = i < first;
        cloud.coords.push_back({r * p[0] + (a ? -offset : offset), r * p[1], r * p[2]});
        labels.push_back(a ? 0 : 1);
      }
      break;
    }
  }
  if (noise_sigma > 0.0) {
    for (auto& p : cloud.coords) {
      for (double& v : p) v += noise_sigma * rng.normal();
    }
  }
  if (!labels.empty()) cloud.labels = std::move(labels);
  return cloud;
}

PointCloud normalize_cloud(const PointCloud& cloud) {
  validate_cloud(cloud);
  Point3 mean{0.0, 0.0, 0.0};
  for (const auto& p : cloud.coords) {
    for (int d = 0; d < 3; ++d) mean[d] += p[d];
  }
  const double inv_n = 1.0 / static_cast<double>(cloud.size());
  for (double& m : mean) m *= inv_n;

  PointCloud out = cloud;
  double max_norm = 0.0;
  for (auto& p : out.coords) {
    for (int d = 0; d < 3; ++d) p[d] -= mean[d];
    max_norm = std::max(max_norm, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
  }
  if (!(max_norm > 0.0)) throw Error("normalize_cloud: all points coincide (zero scale)");
  for (auto& p : out.coords) {
    for (double& v : p) v /= max_norm;
  }
  return out;
}

DatasetManifest load_manifest(const fs::path& path, Split split) {
  if (!fs::exists(path)) throw Error("manifest not found: " + path.string());
  const std::string text = read_file(path);
  const fs::path base = path.parent_path();
  DatasetManifest manifest;
  manifest.split = split;
  std::set<fs::path> seen;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) return;
    const auto tab = line.rfind('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(path.string(), lineno, "expected \"path<TAB>class_id\"");
    }
    const std::string_view file = line.substr(0, tab);
    const std::string_view cls = line.substr(tab + 1);
    ManifestEntry e;
    if (file.empty()) throw ParseError(path.string(), lineno, "empty path");
    if (!parse_int(cls, e.class_id)) {
      throw ParseError(path.string(), lineno, "class_id '" + std::string(cls) + "' is not an integer");
    }
    if (e.class_id < 0) throw ParseError(path.string(), lineno, "negative class_id");
    e.path = fs::path(file);
    if (e.path.is_relative()) e.path = base / e.path;
    e.path = e.path.lexically_normal();
    if (!seen.insert(e.path).second) {
      throw ParseError(path.string(), lineno, "duplicate path " + e.path.string());
    }
    manifest.entries.push_back(std::move(e));
  });
  return manifest;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  for (const auto& e : manifest.entries) {
    fs::path p = e.path;
    auto rel = p.lexically_relative(base);
    if (!rel.empty() && *rel.begin() != "..") p = rel;
    out << p.generic_string() << '\t' << e.class_id << '\n';
  }
}

std::vector<PointCloud> load_dataset(const DatasetManifest& manifest) {
  std::vector<PointCloud> clouds;
  clouds.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    auto cloud = load_xyz(e.path);
    cloud.class_id = e.class_id;
    clouds.push_back(std::move(cloud));
  }
  return clouds;
}

}  // namespace lrcnet
