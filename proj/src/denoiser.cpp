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

#include "diffdepth/denoiser.hpp"

#include <cmath>
#include <numeric>

#include <torch/torch.h>

#include "diffdepth/errors.hpp"

namespace diffdepth {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

torch::Tensor time_embedding(int64_t t, int64_t dim) {
  DIFFDEPTH_REQUIRE(t >= 0, "timestep must be non-negative");
  return time_embedding(torch::tensor({t}, torch::kLong), dim).squeeze(0);
}

torch::Tensor time_embedding(const torch::Tensor& t, int64_t dim) {
  DIFFDEPTH_REQUIRE(dim > 0 && dim % 2 == 0, "time embedding dim must be positive and even");
  DIFFDEPTH_REQUIRE(t.dim() == 1, "timesteps must be 1-D");
  auto tf = t.to(torch::kFloat64).unsqueeze(1);
  auto i = torch::arange(dim / 2, torch::kFloat64);
  auto freq = torch::pow(10000.0, -2.0 * i / static_cast<double>(dim)).unsqueeze(0);
  auto phase = tf * freq;
  // Interleave: even slots sin, odd slots cos.
  return torch::stack({torch::sin(phase), torch::cos(phase)}, 2).reshape({t.size(0), dim});
}

DenoiserImpl::DenoiserImpl(const DenoiserOptions& options) : options_(options) {
  const auto d = options_.latent_dim, c = options_.condition_dim, w = options_.width;
  DIFFDEPTH_REQUIRE(d > 0 && c > 0 && w > 0, "denoiser dims must be positive");
  DIFFDEPTH_REQUIRE(options_.time_dim > 0 && options_.time_dim % 2 == 0,
                    "time embedding dim must be positive and even");
  DIFFDEPTH_REQUIRE(options_.attention_window >= 0, "attention window must be >= 0");
  cond_proj_ = register_module("cond_proj", nn::Conv2d(nn::Conv2dOptions(c, d, 3).padding(1)));
  fuse_conv_ = register_module("fuse_conv", nn::Conv2d(nn::Conv2dOptions(d, w, 3).padding(1)));
  fuse_norm_ = register_module(
      "fuse_norm", nn::GroupNorm(nn::GroupNormOptions(std::gcd(options_.norm_groups, w), w)));
  time_hidden_ = register_module("time_hidden", nn::Linear(options_.time_dim, w));
  time_out_ = register_module("time_out", nn::Linear(w, 2 * w));
  attn_qkv_ = register_module("attn_qkv", nn::Conv2d(nn::Conv2dOptions(w, 3 * w, 1)));
  attn_out_ = register_module("attn_out", nn::Conv2d(nn::Conv2dOptions(w, w, 1)));
  head_ = register_module("head", nn::Conv2d(nn::Conv2dOptions(w, d, 1)));
  bottleneck_in_ = register_module("bottleneck_in", nn::Conv2d(nn::Conv2dOptions(d, w, 1)));
  bottleneck_mid_ =
      register_module("bottleneck_mid", nn::Conv2d(nn::Conv2dOptions(w, w, 3).padding(1)));
  bottleneck_out_ = register_module("bottleneck_out", nn::Conv2d(nn::Conv2dOptions(w, d, 1)));
  const int64_t squeezed = std::max<int64_t>(1, d / 2);
  se_reduce_ = register_module("se_reduce", nn::Linear(d, squeezed));
  se_expand_ = register_module("se_expand", nn::Linear(squeezed, d));
  refine_scale_ = register_parameter("refine_scale", torch::zeros({d}));
}

torch::Tensor DenoiserImpl::project_condition(const torch::Tensor& condition) {
  DIFFDEPTH_REQUIRE(condition.dim() == 4 && condition.size(1) == options_.condition_dim,
                    "condition must be [B,c,h,w]");
  auto up = F::interpolate(condition, F::InterpolateFuncOptions()
                                          .scale_factor(std::vector<double>{2.0, 2.0})
                                          .mode(torch::kNearest));
  return cond_proj_(up);
}

torch::Tensor DenoiserImpl::attend(const torch::Tensor& h, torch::Tensor* weights) {
  const auto b = h.size(0), w = h.size(1), hh = h.size(2), ww = h.size(3);
  auto qkv = attn_qkv_(h);
  torch::Tensor tokens;  // [groups, n, 3w]
  const auto win = options_.attention_window;
  if (win == 0) {
    tokens = qkv.flatten(2).transpose(1, 2);
  } else {
    if (hh % win != 0 || ww % win != 0) {
      throw InvalidArgument("latent dims not divisible by attention window");
    }
    tokens = qkv.view({b, 3 * w, hh / win, win, ww / win, win})
                 .permute({0, 2, 4, 3, 5, 1})
                 .reshape({-1, win * win, 3 * w});
  }
  auto parts = tokens.chunk(3, 2);
  auto scores = torch::bmm(parts[0], parts[1].transpose(1, 2)) / std::sqrt(static_cast<double>(w));
  auto attn = torch::softmax(scores, -1);
  if (weights != nullptr) *weights = attn;
  auto mixed = torch::bmm(attn, parts[2]);  // [groups, n, w]
  if (win == 0) {
    mixed = mixed.transpose(1, 2).reshape({b, w, hh, ww});
  } else {
    mixed = mixed.view({b, hh / win, ww / win, win, win, w})
                .permute({0, 5, 1, 3, 2, 4})
                .reshape({b, w, hh, ww});
  }
  return attn_out_(mixed);
}

torch::Tensor DenoiserImpl::forward_projected(const torch::Tensor& xt, const torch::Tensor& t,
                                              const torch::Tensor& projected,
                                              DenoiserTrace* trace) {
  DIFFDEPTH_REQUIRE(xt.dim() == 4 && xt.size(1) == options_.latent_dim,
                    "latent must be [B,d,h,w]");
  if (projected.sizes() != xt.sizes()) {
    throw InvalidArgument("projected condition shape does not match the latent");
  }
  DIFFDEPTH_REQUIRE(t.dim() == 1 && t.size(0) == xt.size(0), "need one timestep per batch element");
  auto tl = t.to(torch::kLong);
  if (!(torch::all(tl >= 1).item<bool>() && torch::all(tl <= options_.train_steps).item<bool>())) {
    throw InvalidArgument("denoiser timestep outside [1, T]");
  }

  // Fusion: elementwise sum, conv block with time modulation, self-attention.
  auto h = fuse_norm_(fuse_conv_(xt + projected));
  auto emb = time_embedding(tl, options_.time_dim).to(xt.scalar_type());
  auto mod = time_out_(torch::silu(time_hidden_(emb)));
  auto scale_shift = mod.chunk(2, 1);
  const auto w = options_.width;
  h = h * (1 + scale_shift[0].view({-1, w, 1, 1})) + scale_shift[1].view({-1, w, 1, 1});
  h = torch::silu(h);
  torch::Tensor attn_weights;
  h = h + attend(h, trace != nullptr ? &attn_weights : nullptr);
  auto fused = head_(h);

  // Refinement: bottleneck + channel attention, residual through refine_scale.
  auto r = bottleneck_out_(torch::silu(bottleneck_mid_(torch::silu(bottleneck_in_(fused)))));
  auto gate = torch::sigmoid(se_expand_(torch::relu(se_reduce_(r.mean({2, 3})))));
  r = r * gate.unsqueeze(-1).unsqueeze(-1);
  auto out = fused + refine_scale_.view({1, -1, 1, 1}) * r;

  if (trace != nullptr) {
    trace->fused = fused;
    trace->attention = attn_weights;
    trace->output = out;
  }
  return out;
}

torch::Tensor DenoiserImpl::predict_x0(const torch::Tensor& xt, const torch::Tensor& t,
                                       const torch::Tensor& condition) {
  DIFFDEPTH_REQUIRE(condition.dim() == 4 && xt.dim() == 4, "inputs must be NCHW");
  if (condition.size(2) * 2 != xt.size(2) || condition.size(3) * 2 != xt.size(3) ||
      condition.size(0) != xt.size(0)) {
    throw InvalidArgument("upsampled condition does not match the latent grid");
  }
  return forward_projected(xt, t, project_condition(condition));
}

torch::Tensor DenoiserImpl::predict_x0(const torch::Tensor& xt, int64_t t,
                                       const torch::Tensor& condition) {
  return predict_x0(xt, torch::full({xt.size(0)}, t, torch::kLong), condition);
}

}  // namespace diffdepth
