// Copyright 2026 The diffdepth Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Synthetic scenes with analytic depth, sparsification and on-disk datasets.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>
#include <torch/types.h>

namespace diffdepth {

using Rgb = std::array<double, 3>;

/// Axis-aligned pixel rectangle [u0, u1) x [v0, v1) at constant depth.
struct FrontoRect {
  int64_t u0 = 0, v0 = 0, u1 = 0, v1 = 0;
  double depth = 1.0;
  Rgb albedo{0.5, 0.5, 0.5};
};

/// Pixel rectangle whose depth is linear in pixel coordinates:
/// z(u, v) = depth + grad_u * (u - u0) + grad_v * (v - v0).
struct TiltedPlane {
  int64_t u0 = 0, v0 = 0, u1 = 0, v1 = 0;
  double depth = 1.0;
  double grad_u = 0.0;
  double grad_v = 0.0;
  Rgb albedo{0.5, 0.5, 0.5};
};

/// Sphere in camera coordinates (x right, y down, z forward), meters.
struct Sphere {
  std::array<double, 3> center{0.0, 0.0, 5.0};
  double radius = 1.0;
  Rgb albedo{0.5, 0.5, 0.5};
};

using Primitive = std::variant<FrontoRect, TiltedPlane, Sphere>;

enum class ObjectKind : uint8_t { kFronto = 1, kTilted = 2, kSphere = 4 };

struct SceneSpec {
  int64_t height = 64;
  int64_t width = 96;
  int64_t min_objects = 2;
  int64_t max_objects = 5;
  bool ground_plane = true;
  /// Bitwise OR of ObjectKind values allowed for random objects.
  uint8_t kinds = 7;
  double d_min = 1.5;
  double d_max = 10.0;
  double camera_height = 1.5;
  /// Focal length as a fraction of the image width.
  double focal_scale = 0.8;
  /// Principal row as a fraction of the image height (horizon position).
  double horizon = 0.35;
  std::array<double, 3> light{-0.3, -0.8, -0.5};

  /// Throws InvalidArgument for inconsistent values.
  void validate() const;
  nlohmann::json to_json() const;
  static SceneSpec from_json(const nlohmann::json& j);
  /// FNV-1a hash of the canonical JSON form, as 16 hex digits.
  std::string hash() const;
};

/// An explicit scene: optional ground plane / back wall plus primitives.
struct Scene {
  bool ground_plane = true;
  std::vector<Primitive> objects;
};

/// Image [3,H,W] float32 in [0,1] quantized to 1/255; depth [H,W] float32
/// meters; sparse_depth [H,W] (0 where invalid); sparse_mask [H,W] bool.
struct Sample {
  std::string id;
  torch::Tensor image;
  torch::Tensor depth;
  torch::Tensor sparse_depth;
  torch::Tensor sparse_mask;
  uint64_t seed = 0;
  std::string spec_hash;
};

/// Random scene layout for (spec, seed).
Scene sample_scene(const SceneSpec& spec, uint64_t seed);

/// Z-buffers the scene and shades it:
/// intensity = albedo * (0.3 + 0.7 max(0, n.l)) * (1 - 0.5 depth / d_max).
/// Throws InvalidArgument if any pixel is left without a surface.
Sample render_scene(const SceneSpec& spec, const Scene& scene);

/// render_scene(sample_scene(spec, seed)); sparse fields equal the dense ones.
Sample generate_scene(const SceneSpec& spec, uint64_t seed);

enum class SparsePattern { kUniform, kScanline };
SparsePattern parse_sparse_pattern(const std::string& name);
std::string to_string(SparsePattern p);

struct SparseDepth {
  torch::Tensor depth;  ///< [H,W], 0 at dropped pixels
  torch::Tensor mask;   ///< [H,W] bool
};

/// Keeps round(density * H * W) pixels chosen uniformly (kUniform), or every
/// k-th row with k = round(1 / density) from a seeded offset (kScanline).
SparseDepth sparsify(const torch::Tensor& depth, double density, SparsePattern pattern,
                     uint64_t seed);

// ---------------------------------------------------------------- files

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetManifest {
  std::filesystem::path root;  ///< dataset root (parent of the split dir)
  std::string split;
  std::vector<std::string> ids;
  int version = kDatasetFormatVersion;
  std::string spec_hash;

  std::filesystem::path split_dir() const { return root / split; }
  void save() const;
  static DatasetManifest load(const std::filesystem::path& manifest_path);
};

/// depth * 256 rounded half-to-even. Throws IoError when a positive depth
/// rounds to 0 or the value exceeds 65535.
uint16_t encode_depth_value(double depth_m);
/// Clamps depths into the range the 16-bit encoding can represent.
torch::Tensor clamp_to_png_range(const torch::Tensor& depth);
double decode_depth_value(uint16_t stored);

/// 16-bit grayscale PNG with value = round(depth * 256), 0 = invalid.
void write_depth_png(const std::filesystem::path& path, const torch::Tensor& depth,
                     const torch::Tensor& valid);
/// Returns [H,W] float32 meters (0 where stored value is 0).
torch::Tensor read_depth_png(const std::filesystem::path& path);
void write_rgb_png(const std::filesystem::path& path, const torch::Tensor& image);
/// Returns [3,H,W] float32 in [0,1].
torch::Tensor read_rgb_png(const std::filesystem::path& path);
/// 8-bit visualization: near warm, far cool, invalid black.
void write_colormap_png(const std::filesystem::path& path, const torch::Tensor& depth,
                        const torch::Tensor& valid, double d_min, double d_max);

/// Writes {split_dir}/image|depth|sparse/{id}.png.
void save_sample(const std::filesystem::path& split_dir, const Sample& sample);
Sample load_sample(const std::filesystem::path& split_dir, const std::string& id);
/// Every sample listed in a manifest, in manifest order.
std::vector<Sample> load_split(const DatasetManifest& manifest);

}  // namespace diffdepth
