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


#include "diffdepth/augment.hpp"

#include <cmath>
#include <numbers>

#include <torch/torch.h>

#include "diffdepth/errors.hpp"

namespace diffdepth {

namespace F = torch::nn::functional;

namespace {

void check(const TrainSample& s) {
  DIFFDEPTH_REQUIRE(s.image.dim() == 3 && s.image.size(0) == 3, "image must be [3,H,W]");
  DIFFDEPTH_REQUIRE(s.depth.dim() == 2 && s.depth.sizes() == s.image.sizes().slice(1),
                    "depth must be [H,W] matching the image");
  DIFFDEPTH_REQUIRE(s.mask.sizes() == s.depth.sizes(), "mask must match depth");
}

torch::Tensor resize(const torch::Tensor& x, int64_t h, int64_t w, bool nearest) {
  auto opts = F::InterpolateFuncOptions().size(std::vector<int64_t>{h, w});
  if (nearest) {
    opts.mode(torch::kNearest);
  } else {
    opts.mode(torch::kBilinear).align_corners(false);
  }
  return F::interpolate(x.unsqueeze(0), opts).squeeze(0);
}

}  // namespace

TrainSample to_train_sample(const Sample& s, bool sparse) {
  if (sparse) return {s.image, s.sparse_depth, s.sparse_mask};
  return {s.image, s.depth, s.depth > 0};
}

TrainSample rescale(const TrainSample& in, double s) {
  check(in);
  DIFFDEPTH_REQUIRE(s > 0.0, "scale must be positive");
  const int64_t h = std::llround(in.depth.size(0) * s);
  const int64_t w = std::llround(in.depth.size(1) * s);
  TrainSample out;
  out.image = resize(in.image, h, w, false).clamp(0.0, 1.0);
  out.mask = resize(in.mask.to(torch::kFloat32).unsqueeze(0), h, w, true).squeeze(0) > 0.5;
  out.depth = resize(in.depth.unsqueeze(0), h, w, true).squeeze(0) / s;
  out.depth = torch::where(out.mask, out.depth, torch::zeros_like(out.depth));
  return out;
}

TrainSample crop(const TrainSample& in, int64_t top, int64_t left, int64_t h, int64_t w) {
  check(in);
  const int64_t H = in.depth.size(0), W = in.depth.size(1);
  if (h <= 0 || w <= 0 || h > H || w > W || top < 0 || left < 0 || top + h > H || left + w > W) {
    throw InvalidArgument("crop " + std::to_string(h) + "x" + std::to_string(w) +
                          " does not fit image " + std::to_string(H) + "x" + std::to_string(W));
  }
  using torch::indexing::Slice;
  return {in.image.index({Slice(), Slice(top, top + h), Slice(left, left + w)}).contiguous(),
          in.depth.index({Slice(top, top + h), Slice(left, left + w)}).contiguous(),
          in.mask.index({Slice(top, top + h), Slice(left, left + w)}).contiguous()};
}

TrainSample hflip(const TrainSample& in) {
  check(in);
  return {in.image.flip({2}), in.depth.flip({1}), in.mask.flip({1})};
}

TrainSample rotate(const TrainSample& in, double degrees) {
  check(in);
  if (degrees == 0.0) return {in.image.clone(), in.depth.clone(), in.mask.clone()};
  const double a = degrees * std::numbers::pi / 180.0;
  const int64_t H = in.depth.size(0), W = in.depth.size(1);
  // Rotation in pixel space expressed in normalized grid coordinates.
  const double c = std::cos(a), s = std::sin(a);
  const double ar = static_cast<double>(W) / static_cast<double>(H);
  auto theta = torch::tensor({c, -s / ar, 0.0, s * ar, c, 0.0}, torch::kFloat32).view({1, 2, 3});
  auto grid = F::affine_grid(theta, {1, 1, H, W}, false);

  auto sample = [&](const torch::Tensor& x, bool nearest) {
    auto opts = F::GridSampleFuncOptions().padding_mode(torch::kZeros).align_corners(false);
    if (nearest) {
      opts.mode(torch::kNearest);
    } else {
      opts.mode(torch::kBilinear);
    }
    return F::grid_sample(x.unsqueeze(0), grid, opts).squeeze(0);
  };
  TrainSample out;
  out.image = sample(in.image, false).clamp(0.0, 1.0);
  auto inside = sample(torch::ones({1, H, W}), true).squeeze(0) > 0.5;
  out.mask = (sample(in.mask.to(torch::kFloat32).unsqueeze(0), true).squeeze(0) > 0.5) & inside;
  out.depth = sample(in.depth.unsqueeze(0), true).squeeze(0);
  out.depth = torch::where(out.mask, out.depth, torch::zeros_like(out.depth));
  return out;
}

torch::Tensor color_jitter(const torch::Tensor& image, double brightness, double contrast,
                           double saturation, double hue) {
  auto x = image * brightness;
  x = (x - x.mean()) * contrast + x.mean();
  auto luma = (0.299 * x[0] + 0.587 * x[1] + 0.114 * x[2]).unsqueeze(0);
  x = (x - luma) * saturation + luma;
  if (hue != 0.0) {
    auto to_yiq = torch::tensor({0.299, 0.587, 0.114, 0.596, -0.274, -0.322, 0.211, -0.523, 0.312},
                                torch::kFloat32)
                      .view({3, 3});
    auto from_yiq = torch::tensor({1.0, 0.956, 0.621, 1.0, -0.272, -0.647, 1.0, -1.106, 1.703},
                                  torch::kFloat32)
                        .view({3, 3});
    const double a = 2.0 * std::numbers::pi * hue;
    auto rot = torch::tensor({1.0, 0.0, 0.0, 0.0, std::cos(a), -std::sin(a), 0.0, std::sin(a),
                              std::cos(a)},
                             torch::kFloat32)
                   .view({3, 3});
    auto m = torch::matmul(from_yiq, torch::matmul(rot, to_yiq));
    x = torch::einsum("ij,jhw->ihw", {m, x});
  }
  return x.clamp(0.0, 1.0);
}

TrainSample augment(const TrainSample& in, const AugmentationConfig& cfg, std::mt19937_64& rng) {
  check(in);
  const int64_t H = in.depth.size(0), W = in.depth.size(1);
  const int64_t ch = cfg.crop_h > 0 ? cfg.crop_h : H;
  const int64_t cw = cfg.crop_w > 0 ? cfg.crop_w : W;
  if (ch > H || cw > W) throw InvalidArgument("crop larger than image");
  auto uniform = [&](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  TrainSample out = in;
  const double s = uniform(cfg.scale_min, cfg.scale_max);
  if (s != 1.0) out = rescale(out, s);
  const int64_t sh = out.depth.size(0), sw = out.depth.size(1);
  if (ch != sh || cw != sw) {
    const auto top = std::uniform_int_distribution<int64_t>(0, sh - ch)(rng);
    const auto left = std::uniform_int_distribution<int64_t>(0, sw - cw)(rng);
    out = crop(out, top, left, ch, cw);
  }
  if (cfg.flip_prob > 0.0 && std::bernoulli_distribution(cfg.flip_prob)(rng)) out = hflip(out);
  if (cfg.rotation_deg > 0.0) out = rotate(out, uniform(-cfg.rotation_deg, cfg.rotation_deg));
  if (cfg.brightness > 0.0 || cfg.contrast > 0.0 || cfg.saturation > 0.0 || cfg.hue > 0.0) {
    const double b = uniform(1.0 - cfg.brightness, 1.0 + cfg.brightness);
    const double c = uniform(1.0 - cfg.contrast, 1.0 + cfg.contrast);
    const double sat = uniform(1.0 - cfg.saturation, 1.0 + cfg.saturation);
    const double h = uniform(-cfg.hue, cfg.hue);
    out.image = color_jitter(out.image, b, c, sat, h);
  }
  return out;
}

}  // namespace diffdepth
