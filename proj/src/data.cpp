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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include <torch/torch.h>

#include "diffdepth/data.hpp"
#include "diffdepth/errors.hpp"

namespace diffdepth {

namespace {

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  return {v[0] / n, v[1] / n, v[2] / n};
}

struct Camera {
  double f, cx, cy;

  Vec3 ray(int64_t u, int64_t v) const {
    return {(static_cast<double>(u) + 0.5 - cx) / f, (static_cast<double>(v) + 0.5 - cy) / f, 1.0};
  }
};

Camera make_camera(const SceneSpec& spec) {
  return {spec.focal_scale * static_cast<double>(spec.width), 0.5 * static_cast<double>(spec.width),
          spec.horizon * static_cast<double>(spec.height)};
}

struct Hit {
  double z = std::numeric_limits<double>::infinity();
  Vec3 normal{0.0, 0.0, -1.0};
  Rgb albedo{0.0, 0.0, 0.0};
};

const Rgb kGroundAlbedo{0.55, 0.5, 0.42};
const Rgb kWallAlbedo{0.6, 0.68, 0.85};

// Orient a surface normal toward the camera along ray r.
Vec3 facing(Vec3 n, const Vec3& r) {
  if (dot(n, r) > 0.0) n = {-n[0], -n[1], -n[2]};
  return n;
}

void intersect(const FrontoRect& p, const Camera&, int64_t u, int64_t v, Hit& hit) {
  if (u < p.u0 || u >= p.u1 || v < p.v0 || v >= p.v1) return;
  if (p.depth < hit.z) hit = {p.depth, {0.0, 0.0, -1.0}, p.albedo};
}

void intersect(const TiltedPlane& p, const Camera& cam, int64_t u, int64_t v, Hit& hit) {
  if (u < p.u0 || u >= p.u1 || v < p.v0 || v >= p.v1) return;
  const double z = p.depth + p.grad_u * static_cast<double>(u - p.u0) +
                   p.grad_v * static_cast<double>(v - p.v0);
  if (!(z > 0.0) || z >= hit.z) return;
  const Vec3 r = cam.ray(u, v);
  const Vec3 du{p.grad_u * r[0] + z / cam.f, p.grad_u * r[1], p.grad_u};
  const Vec3 dv{p.grad_v * r[0], p.grad_v * r[1] + z / cam.f, p.grad_v};
  hit = {z, facing(normalized(cross(du, dv)), r), p.albedo};
}

void intersect(const Sphere& s, const Camera& cam, int64_t u, int64_t v, Hit& hit) {
  const Vec3 r = cam.ray(u, v);
  const double a = dot(r, r);
  const double b = -2.0 * dot(r, s.center);
  const double c = dot(s.center, s.center) - s.radius * s.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  const double z = (-b - std::sqrt(disc)) / (2.0 * a);
  if (!(z > 0.0) || z >= hit.z) return;
  const Vec3 p{z * r[0], z * r[1], z * r[2]};
  const Vec3 n = normalized({p[0] - s.center[0], p[1] - s.center[1], p[2] - s.center[2]});
  hit = {z, facing(n, r), s.albedo};
}

Rgb random_albedo(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(0.3, 1.0);
  return {a(rng), a(rng), a(rng)};
}

}  // namespace

void SceneSpec::validate() const {
  DIFFDEPTH_REQUIRE(height > 0 && width > 0, "scene dims must be positive");
  DIFFDEPTH_REQUIRE(height % 2 == 0 && width % 2 == 0, "scene dims must be even");
  DIFFDEPTH_REQUIRE(d_min > 0.0 && d_min < d_max, "require 0 < d_min < d_max");
  DIFFDEPTH_REQUIRE(min_objects >= 0 && min_objects <= max_objects, "bad object count range");
  DIFFDEPTH_REQUIRE(max_objects == 0 || (kinds & 7) != 0, "no object kinds enabled");
  DIFFDEPTH_REQUIRE(camera_height > 0.0 && focal_scale > 0.0, "bad camera parameters");
  if (!ground_plane && max_objects == 0) {
    throw InvalidArgument("unsatisfiable scene spec: no ground plane and no objects");
  }
}

nlohmann::json SceneSpec::to_json() const {
  return {{"height", height},         {"width", width},           {"min_objects", min_objects},
          {"max_objects", max_objects}, {"ground_plane", ground_plane}, {"kinds", kinds},
          {"d_min", d_min},           {"d_max", d_max},           {"camera_height", camera_height},
          {"focal_scale", focal_scale}, {"horizon", horizon},     {"light", light}};
}

SceneSpec SceneSpec::from_json(const nlohmann::json& j) {
  SceneSpec s;
  s.height = j.at("height").get<int64_t>();
  s.width = j.at("width").get<int64_t>();
  s.min_objects = j.at("min_objects").get<int64_t>();
  s.max_objects = j.at("max_objects").get<int64_t>();
  s.ground_plane = j.at("ground_plane").get<bool>();
  s.kinds = j.at("kinds").get<uint8_t>();
  s.d_min = j.at("d_min").get<double>();
  s.d_max = j.at("d_max").get<double>();
  s.camera_height = j.at("camera_height").get<double>();
  s.focal_scale = j.at("focal_scale").get<double>();
  s.horizon = j.at("horizon").get<double>();
  s.light = j.at("light").get<std::array<double, 3>>();
  return s;
}

std::string SceneSpec::hash() const {
  const std::string text = to_json().dump();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Scene sample_scene(const SceneSpec& spec, uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  const Camera cam = make_camera(spec);
  const double w = static_cast<double>(spec.width), h = static_cast<double>(spec.height);
  Scene scene;
  scene.ground_plane = spec.ground_plane;
  if (!spec.ground_plane) {
    std::uniform_real_distribution<double> wall(0.7 * spec.d_max, spec.d_max);
    scene.objects.push_back(FrontoRect{0, 0, spec.width, spec.height, wall(rng), kWallAlbedo});
  }
  std::vector<ObjectKind> kinds;
  for (auto k : {ObjectKind::kFronto, ObjectKind::kTilted, ObjectKind::kSphere}) {
    if (spec.kinds & static_cast<uint8_t>(k)) kinds.push_back(k);
  }
  std::uniform_int_distribution<int64_t> count(spec.min_objects, spec.max_objects);
  const int64_t n = count(rng);
  const double z_hi = std::max(spec.d_min * 1.01, 0.8 * spec.d_max);
  std::uniform_real_distribution<double> depth(spec.d_min, z_hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int64_t i = 0; i < n && !kinds.empty(); ++i) {
    const auto kind = kinds[static_cast<size_t>(rng() % kinds.size())];
    const double z = depth(rng);
    // Objects stand on the ground: bottom edge at the ground row for depth z.
    const double ground_row = cam.cy + cam.f * spec.camera_height / z;
    const double height_m = 0.5 + 2.0 * unit(rng);
    const double width_m = 0.5 + 1.5 * unit(rng);
    const double uc = w * unit(rng);
    auto clampi = [](double x, double hi) {
      return static_cast<int64_t>(std::clamp(std::round(x), 0.0, hi));
    };
    const int64_t v1 = clampi(ground_row, h);
    const int64_t v0 = clampi(ground_row - cam.f * height_m / z, h);
    const int64_t u0 = clampi(uc - 0.5 * cam.f * width_m / z, w);
    const int64_t u1 = clampi(uc + 0.5 * cam.f * width_m / z, w);
    const Rgb albedo = random_albedo(rng);
    if (kind == ObjectKind::kFronto) {
      scene.objects.push_back(FrontoRect{u0, v0, u1, v1, z, albedo});
    } else if (kind == ObjectKind::kTilted) {
      const double gu = 0.04 * (2.0 * unit(rng) - 1.0);
      const double gv = 0.04 * (2.0 * unit(rng) - 1.0);
      const double du = static_cast<double>(std::max<int64_t>(0, u1 - u0 - 1));
      const double dv = static_cast<double>(std::max<int64_t>(0, v1 - v0 - 1));
      const double lowest = z + std::min(0.0, gu * du) + std::min(0.0, gv * dv);
      const double base = lowest < spec.d_min ? z + (spec.d_min - lowest) : z;
      scene.objects.push_back(TiltedPlane{u0, v0, u1, v1, base, gu, gv, albedo});
    } else {
      const double r = 0.3 + 0.7 * unit(rng);
      const double zc = std::max(z, spec.d_min + r);
      const double xc = (uc - cam.cx) / cam.f * zc;
      scene.objects.push_back(Sphere{{xc, spec.camera_height - r, zc}, r, albedo});
    }
  }
  return scene;
}

Sample render_scene(const SceneSpec& spec, const Scene& scene) {
  DIFFDEPTH_REQUIRE(spec.height > 0 && spec.width > 0 && spec.height % 2 == 0 &&
                        spec.width % 2 == 0,
                    "scene dims must be positive and even");
  if (!scene.ground_plane && scene.objects.empty()) {
    throw InvalidArgument("unsatisfiable scene: no ground plane and no objects");
  }
  const Camera cam = make_camera(spec);
  const Vec3 light = normalized(spec.light);
  const int64_t H = spec.height, W = spec.width;
  auto image = torch::zeros({3, H, W}, torch::kFloat32);
  auto depth = torch::zeros({H, W}, torch::kFloat32);
  auto img = image.accessor<float, 3>();
  auto dep = depth.accessor<float, 2>();
  for (int64_t v = 0; v < H; ++v) {
    for (int64_t u = 0; u < W; ++u) {
      Hit hit;
      if (scene.ground_plane) {
        const Vec3 r = cam.ray(u, v);
        const double zg = r[1] > 0.0 ? spec.camera_height / r[1] : hit.z;
        if (zg <= spec.d_max) {
          hit = {zg, {0.0, -1.0, 0.0}, kGroundAlbedo};
        } else {
          hit = {spec.d_max, {0.0, 0.0, -1.0}, kWallAlbedo};
        }
      }
      for (const auto& obj : scene.objects) {
        std::visit([&](const auto& p) { intersect(p, cam, u, v, hit); }, obj);
      }
      if (!std::isfinite(hit.z)) {
        throw InvalidArgument("scene leaves pixel (" + std::to_string(u) + ", " +
                              std::to_string(v) + ") without a surface");
      }
      const double shade = 0.3 + 0.7 * std::max(0.0, dot(hit.normal, light));
      const double atten = 1.0 - 0.5 * std::min(hit.z, spec.d_max) / spec.d_max;
      for (int c = 0; c < 3; ++c) {
        const double intensity = std::clamp(hit.albedo[static_cast<size_t>(c)] * shade * atten, 0.0, 1.0);
        img[c][v][u] = static_cast<float>(std::round(intensity * 255.0) / 255.0);
      }
      dep[v][u] = static_cast<float>(hit.z);
    }
  }
  Sample s;
  s.image = image;
  s.depth = depth;
  s.sparse_depth = depth.clone();
  s.sparse_mask = torch::ones({H, W}, torch::kBool);
  s.spec_hash = spec.hash();
  return s;
}

Sample generate_scene(const SceneSpec& spec, uint64_t seed) {
  auto s = render_scene(spec, sample_scene(spec, seed));
  s.seed = seed;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%010llu", static_cast<unsigned long long>(seed));
  s.id = buf;
  return s;
}

SparsePattern parse_sparse_pattern(const std::string& name) {
  if (name == "uniform") return SparsePattern::kUniform;
  if (name == "scanline") return SparsePattern::kScanline;
  throw InvalidArgument("unknown sparse pattern: " + name);
}

std::string to_string(SparsePattern p) {
  return p == SparsePattern::kUniform ? "uniform" : "scanline";
}

SparseDepth sparsify(const torch::Tensor& depth, double density, SparsePattern pattern,
                     uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0)) throw InvalidArgument("density must lie in (0, 1]");
  DIFFDEPTH_REQUIRE(depth.dim() == 2, "sparsify expects an [H,W] depth map");
  const int64_t H = depth.size(0), W = depth.size(1);
  auto mask = torch::zeros({H, W}, torch::kBool);
  auto* m = mask.data_ptr<bool>();
  std::mt19937_64 rng(seed);
  if (pattern == SparsePattern::kUniform) {
    const int64_t n = H * W;
    const auto keep = static_cast<int64_t>(std::llround(density * static_cast<double>(n)));
    std::vector<int64_t> idx(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    // Partial Fisher-Yates: the first `keep` slots form a uniform subset.
    for (int64_t i = 0; i < keep; ++i) {
      std::uniform_int_distribution<int64_t> pick(i, n - 1);
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
      m[idx[static_cast<size_t>(i)]] = true;
    }
  } else {
    const int64_t k = std::max<int64_t>(1, std::llround(1.0 / density));
    std::uniform_int_distribution<int64_t> offset(0, k - 1);
    for (int64_t row = offset(rng); row < H; row += k) mask[row].fill_(true);
  }
  SparseDepth out;
  out.mask = mask;
  out.depth = torch::where(mask, depth, torch::zeros_like(depth));
  return out;
}

}  // namespace diffdepth
