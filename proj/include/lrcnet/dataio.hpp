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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lrcnet {

using Point3 = std::array<double, 3>;

/// An N x 3 point set with optional per-point part labels and shape class.
struct PointCloud {
  std::vector<Point3> coords;
  std::optional<std::vector<int>> labels;
  std::optional<int> class_id;

  std::size_t size() const { return coords.size(); }
};

/// Throws lrcnet::Error unless N >= 1, every coordinate is finite and labels
/// (when present) have length N and lie in [0, num_parts). num_parts <= 0
/// skips the label range check.
void validate_cloud(const PointCloud& cloud, int num_parts = 0);

/// Reads the XYZ text dialect: one point per line, 3 or 4 whitespace
/// separated fields (the 4th an integer label), '#' starts a comment.
PointCloud load_xyz(const std::filesystem::path& path);
PointCloud parse_xyz(std::string_view text, const std::string& source = "<memory>");
/// Writes 17 significant digits so coordinates round-trip exactly.
void save_xyz(const std::filesystem::path& path, const PointCloud& cloud);

struct TriangleMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<std::int64_t, 3>> faces;
};

/// Minimal ASCII OFF: "OFF" header, "V F E" counts, vertices, then faces.
/// Polygonal faces are fan-triangulated.
TriangleMesh load_off(const std::filesystem::path& path);
TriangleMesh parse_off(std::string_view text, const std::string& source = "<memory>");

/// Area-weighted triangle choice followed by uniform barycentric sampling.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

enum class ShapeKind { kSphere, kCube, kCylinder, kTwinSpheres };

ShapeKind parse_shape_kind(std::string_view name);
std::string_view shape_kind_name(ShapeKind kind);
/// Number of part labels the generator attaches (0 for unlabeled kinds).
int shape_kind_parts(ShapeKind kind);

/// Geometry of the synthetic surfaces, in model units.
struct SyntheticShapes {
  double cylinder_radius = 1.0;
  double cylinder_height = 2.0;
  double twin_radius = 1.0;
  /// Closest surface-to-surface distance between the two spheres.
  double twin_gap = 1.0;
};

/// Samples n points on the named surface plus isotropic Gaussian noise.
/// Cylinder labels: 0 side, 1 top cap, 2 bottom cap. Twin spheres: 0 for the
/// sphere at negative x, 1 for the other. class_id is the ShapeKind ordinal.
PointCloud gen_synthetic(ShapeKind kind, std::size_t n, double noise_sigma,
                         std::uint64_t seed, const SyntheticShapes& shapes = {});

/// Zero centroid, unit maximum point norm. Throws when all points coincide.
PointCloud normalize_cloud(const PointCloud& cloud);

enum class Split { kTrain, kTest };

struct ManifestEntry {
  std::filesystem::path path;
  int class_id = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  Split split = Split::kTrain;
};

/// "path<TAB>class_id" per line; relative paths resolve against the
/// manifest's directory. Blank lines are skipped.
DatasetManifest load_manifest(const std::filesystem::path& path, Split split = Split::kTrain);
/// Paths under the manifest directory are written relative to it.
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Loads every entry with load_xyz and stamps its class_id.
std::vector<PointCloud> load_dataset(const DatasetManifest& manifest);

}  // namespace lrcnet
