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

#include "diffdepth/codec.hpp"

#include <cmath>

#include <torch/torch.h>

#include "diffdepth/errors.hpp"

namespace diffdepth {

namespace F = torch::nn::functional;

namespace {

constexpr double kMaxLogit = 60.0;

torch::Tensor as_nchw_mask(const torch::Tensor& mask) {
  switch (mask.dim()) {
    case 2: return mask.unsqueeze(0).unsqueeze(0);
    case 3: return mask.unsqueeze(1);
    case 4: return mask;
    default: throw InvalidArgument("mask must have 2, 3 or 4 dimensions");
  }
}

}  // namespace

double depth_from_activation(double s, double cap) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("activation must lie in (0, 1)");
  DIFFDEPTH_REQUIRE(cap > 1.0, "depth cap must exceed 1");
  return std::min(1.0 / s, cap) - 1.0;
}

torch::Tensor depth_from_logits(const torch::Tensor& logits, double cap) {
  DIFFDEPTH_REQUIRE(cap > 1.0, "depth cap must exceed 1");
  return torch::exp(-logits.clamp_max(kMaxLogit)).clamp_max(cap - 1.0);
}

torch::Tensor downsample_mask(const torch::Tensor& mask, int64_t factor) {
  DIFFDEPTH_REQUIRE(factor >= 1, "pooling factor must be positive");
  auto m = as_nchw_mask(mask);
  const auto h = m.size(-2), w = m.size(-1);
  if (h % factor != 0 || w % factor != 0) {
    throw InvalidArgument("mask dims " + std::to_string(h) + "x" + std::to_string(w) +
                          " not divisible by " + std::to_string(factor));
  }
  auto pooled = F::max_pool2d(m.to(torch::kFloat32),
                              F::MaxPool2dFuncOptions(factor).stride(factor)) > 0.5;
  return pooled.view([&] {
    auto s = mask.sizes().vec();
    s[s.size() - 2] = h / factor;
    s[s.size() - 1] = w / factor;
    return s;
  }());
}

double mask_density(const torch::Tensor& mask) {
  DIFFDEPTH_REQUIRE(mask.numel() > 0, "empty mask");
  return static_cast<double>(mask.sum().item<int64_t>()) / static_cast<double>(mask.numel());
}

GtEncoderImpl::GtEncoderImpl(const GtEncoderOptions& options) : options_(options) {
  const auto d = options_.latent_dim;
  DIFFDEPTH_REQUIRE(d > 0, "latent dim must be positive");
  reduce_ = register_module("reduce", torch::nn::Conv2d(torch::nn::Conv2dOptions(4, d, 1)));
  mid_ = register_module("mid", torch::nn::Conv2d(torch::nn::Conv2dOptions(d, d, 1)));
  expand_ = register_module("expand", torch::nn::Conv2d(torch::nn::Conv2dOptions(d, d, 1)));
}

torch::Tensor GtEncoderImpl::forward(const torch::Tensor& depth, const torch::Tensor& mask) {
  DIFFDEPTH_REQUIRE(depth.dim() == 4 && depth.size(1) == 1, "GT depth must be [B,1,H,W]");
  DIFFDEPTH_REQUIRE(depth.sizes() == mask.sizes(), "GT depth and mask shapes differ");
  DIFFDEPTH_REQUIRE(depth.size(2) % 2 == 0 && depth.size(3) % 2 == 0,
                    "GT depth dims must be even");
  auto filled = torch::where(mask, depth, torch::zeros_like(depth)) * options_.input_scale;
  auto folded = F::pixel_unshuffle(filled, 2);
  auto h = reduce_(folded);
  auto branch = expand_(torch::relu(mid_(torch::relu(h))));
  return h + branch;
}

DepthDecoderImpl::DepthDecoderImpl(const DepthDecoderOptions& options) : options_(options) {
  DIFFDEPTH_REQUIRE(options_.latent_dim > 0 && options_.hidden > 0, "decoder dims must be positive");
  DIFFDEPTH_REQUIRE(options_.max_depth > 1.0, "max depth must exceed 1");
  DIFFDEPTH_REQUIRE(options_.init_depth > 0.0 && options_.init_depth < options_.max_depth - 1.0,
                    "decoder init depth outside output range");
  project_ = register_module(
      "project", torch::nn::Conv2d(torch::nn::Conv2dOptions(options_.latent_dim, options_.hidden, 1)));
  upsample_ = register_module(
      "upsample", torch::nn::ConvTranspose2d(
                      torch::nn::ConvTranspose2dOptions(options_.hidden, options_.hidden, 3)
                          .stride(2)
                          .padding(1)
                          .output_padding(1)));
  out_ = register_module(
      "out", torch::nn::Conv2d(torch::nn::Conv2dOptions(options_.hidden, 1, 3).padding(1)));
  torch::NoGradGuard no_grad;
  out_->bias.fill_(-std::log(options_.init_depth));
}

torch::Tensor DepthDecoderImpl::logits(const torch::Tensor& latent) {
  DIFFDEPTH_REQUIRE(latent.dim() == 4 && latent.size(1) == options_.latent_dim,
                    "decoder input must be [B,d,h,w]");
  auto h = torch::relu(project_(latent));
  h = torch::relu(upsample_(h));
  return out_(h);
}

torch::Tensor DepthDecoderImpl::forward(const torch::Tensor& latent) {
  if (!torch::isfinite(latent).all().item<bool>()) {
    throw InvalidArgument("decoder received a non-finite latent");
  }
  return depth_from_logits(logits(latent), options_.max_depth);
}

}  // namespace diffdepth
