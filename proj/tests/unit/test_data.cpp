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


#include <doctest.h>

#include <cmath>
#include <fstream>

#include <torch/torch.h>

#include "diffdepth/data.hpp"
#include "diffdepth/errors.hpp"
#include "test_util.hpp"

using namespace diffdepth;

namespace {

SceneSpec small_spec() {
  SceneSpec s;
  s.height = 32;
  s.width = 48;
  return s;
}

}  // namespace

TEST_CASE("scenes are deterministic and fully covered") {
  const auto spec = small_spec();
  auto a = generate_scene(spec, 42);
  auto b = generate_scene(spec, 42);
  CHECK(a.id == "s0000000042");
  CHECK(torch::equal(a.image, b.image));
  CHECK(torch::equal(a.depth, b.depth));
  CHECK_FALSE(torch::equal(a.depth, generate_scene(spec, 43).depth));
  CHECK(a.image.sizes() == torch::IntArrayRef({3, 32, 48}));
  CHECK((a.depth > 0).all().item<bool>());
  CHECK(a.depth.max().item<double>() <= spec.d_max + 1e-5);
  // Intensities sit on the 8-bit grid.
  auto q = a.image * 255.0;
  CHECK(torch::allclose(q, q.round(), 0.0, 1e-3));
}

TEST_CASE("ground plane follows the camera geometry") {
  SceneSpec spec = small_spec();
  Scene scene;
  scene.ground_plane = true;
  auto s = render_scene(spec, scene);
  const double f = 0.8 * 48, cy = 0.35 * 32;
  for (int64_t v = 0; v < 32; ++v) {
    const double ray_y = (static_cast<double>(v) + 0.5 - cy) / f;
    const double z = ray_y > 0 ? std::min(1.5 / ray_y, spec.d_max) : spec.d_max;
    CHECK(s.depth[v][7].item<double>() == doctest::Approx(z).epsilon(1e-6));
  }
}

TEST_CASE("primitives render analytically") {
  SceneSpec spec = small_spec();
  Scene scene;
  scene.ground_plane = false;
  scene.objects.push_back(FrontoRect{0, 0, 48, 32, 9.0});
  scene.objects.push_back(TiltedPlane{2, 2, 10, 10, 3.0, 0.1, -0.05});
  scene.objects.push_back(Sphere{{0.0, 0.0, 5.0}, 1.0});
  auto s = render_scene(spec, scene);
  CHECK(s.depth[20][40].item<double>() == doctest::Approx(9.0));
  CHECK(s.depth[2][2].item<double>() == doctest::Approx(3.0));
  CHECK(s.depth[9][5].item<double>() == doctest::Approx(3.0 + 0.1 * 3 - 0.05 * 7));
  // The pixel whose ray passes nearest the optical axis sees the sphere front at ~4 m.
  const int64_t v = static_cast<int64_t>(std::floor(0.35 * 32));
  CHECK(s.depth[v][24].item<double>() == doctest::Approx(4.0).epsilon(1e-3));

  Scene empty;
  empty.ground_plane = false;
  CHECK_THROWS_AS(render_scene(spec, empty), InvalidArgument);
  Scene partial;
  partial.ground_plane = false;
  partial.objects.push_back(FrontoRect{0, 0, 4, 4, 2.0});
  CHECK_THROWS_AS(render_scene(spec, partial), InvalidArgument);
}

TEST_CASE("scene spec validation, hashing and json") {
  SceneSpec s = small_spec();
  CHECK(s.hash().size() == 16);
  CHECK(SceneSpec::from_json(s.to_json()).hash() == s.hash());
  SceneSpec t = s;
  t.d_max = 20.0;
  CHECK(t.hash() != s.hash());
  SceneSpec bad = s;
  bad.ground_plane = false;
  bad.max_objects = 0;
  bad.min_objects = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = s;
  bad.height = 33;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = s;
  bad.d_min = 20.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  // No ground: a back wall keeps every pixel covered.
  SceneSpec walls = s;
  walls.ground_plane = false;
  CHECK((generate_scene(walls, 5).depth > 0).all().item<bool>());
}

TEST_CASE("sparsification") {
  auto depth = torch::rand({128, 128}) * 9 + 1;
  auto sp = sparsify(depth, 0.04, SparsePattern::kUniform, 9);
  const auto kept = sp.mask.sum().item<int64_t>();
  CHECK(kept == 655);
  CHECK(kept >= 573);
  CHECK(kept <= 737);
  CHECK(torch::equal(sp.depth.masked_select(sp.mask), depth.masked_select(sp.mask)));
  CHECK((sp.depth.masked_select(~sp.mask) == 0).all().item<bool>());
  CHECK(torch::equal(sparsify(depth, 0.04, SparsePattern::kUniform, 9).mask, sp.mask));
  CHECK_FALSE(torch::equal(sparsify(depth, 0.04, SparsePattern::kUniform, 10).mask, sp.mask));

  auto lines = sparsify(depth, 0.25, SparsePattern::kScanline, 3);
  auto rows = lines.mask.any(1);
  CHECK(rows.sum().item<int64_t>() == 32);
  CHECK(lines.mask.sum().item<int64_t>() == 32 * 128);
  CHECK(torch::equal(sparsify(depth, 1.0, SparsePattern::kUniform, 1).mask, torch::ones({128, 128}, torch::kBool)));
  CHECK_THROWS_AS(sparsify(depth, 0.0, SparsePattern::kUniform, 1), InvalidArgument);
  CHECK(parse_sparse_pattern("scanline") == SparsePattern::kScanline);
  CHECK_THROWS_AS(parse_sparse_pattern("grid"), InvalidArgument);
}

TEST_CASE("depth value encoding") {
  CHECK(encode_depth_value(0.0) == 0);
  CHECK(encode_depth_value(1.0) == 256);
  CHECK(encode_depth_value(1.0 / 512.0 + 1e-9) == 1);
  // Half-way values round to even.
  CHECK(encode_depth_value(2.5 / 256.0) == 2);
  CHECK(encode_depth_value(3.5 / 256.0) == 4);
  CHECK(encode_depth_value(65535.0 / 256.0) == 65535);
  CHECK_THROWS_AS(encode_depth_value(1.0 / 1024.0), IoError);
  CHECK_THROWS_AS(encode_depth_value(256.0), IoError);
  CHECK_THROWS_AS(encode_depth_value(-1.0), IoError);
  CHECK(decode_depth_value(384) == 1.5);
}

TEST_CASE("sample and manifest round trip") {
  const auto dir = testing::temp_dir("data_roundtrip");
  auto s = generate_scene(small_spec(), 77);
  auto sp = sparsify(s.depth, 0.1, SparsePattern::kUniform, 77);
  s.sparse_depth = sp.depth;
  s.sparse_mask = sp.mask;
  save_sample(dir / "train", s);
  auto back = load_sample(dir / "train", s.id);
  CHECK(back.seed == 77);
  CHECK(torch::equal(back.image, s.image));
  CHECK((back.depth - s.depth).abs().max().item<double>() <= 1.0 / 512.0 + 1e-6);
  CHECK(torch::equal(back.sparse_mask, s.sparse_mask));
  CHECK((back.sparse_depth - s.sparse_depth).abs().max().item<double>() <= 1.0 / 512.0 + 1e-6);

  DatasetManifest m;
  m.root = dir;
  m.split = "train";
  m.ids = {s.id};
  m.spec_hash = small_spec().hash();
  m.save();
  auto loaded = DatasetManifest::load(dir / "train" / "manifest.json");
  CHECK(loaded.ids == m.ids);
  CHECK(loaded.split_dir() == m.split_dir());
  CHECK(load_split(loaded).size() == 1);

  CHECK_THROWS_AS(load_sample(dir / "train", "s0000000001"), IoError);
  {
    std::ofstream junk(dir / "train" / "image" / "junk.png");
    junk << "not a png";
  }
  CHECK_THROWS_AS(read_rgb_png(dir / "train" / "image" / "junk.png"), IoError);
  CHECK_THROWS_AS(DatasetManifest::load(dir / "nope.json"), IoError);
}

TEST_CASE("colormap marks invalid pixels black") {
  const auto dir = testing::temp_dir("colormap");
  auto depth = torch::linspace(1.0, 10.0, 16).view({4, 4});
  auto valid = torch::ones({4, 4}, torch::kBool);
  valid[0][0] = false;
  write_colormap_png(dir / "c.png", depth, valid, 1.0, 10.0);
  auto img = read_rgb_png(dir / "c.png");
  CHECK(img.index({torch::indexing::Slice(), 0, 0}).sum().item<double>() == 0.0);
  CHECK(img.index({torch::indexing::Slice(), 3, 3}).sum().item<double>() > 0.0);
}
