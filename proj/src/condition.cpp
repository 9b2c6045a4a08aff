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

#include "diffdepth/condition.hpp"

#include <numeric>

#include <torch/torch.h>

#include "diffdepth/errors.hpp"

namespace diffdepth {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

void conv_norm_act(nn::Sequential& seq, int64_t in, int64_t out, int64_t stride, int64_t groups) {
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1)));
  seq->push_back(nn::GroupNorm(nn::GroupNormOptions(std::gcd(groups, out), out)));
  seq->push_back(nn::SiLU());
}

}  // namespace

torch::Tensor standardize_image(const torch::Tensor& image, double mean, double std) {
  DIFFDEPTH_REQUIRE(std > 0.0, "image std must be positive");
  return (image - mean) / std;
}

BackboneImpl::BackboneImpl(const BackboneOptions& options) : options_(options) {
  const auto& ch = options_.channels;
  const auto g = options_.norm_groups;
  for (auto c : ch) DIFFDEPTH_REQUIRE(c > 0, "backbone channels must be positive");
  stages_ = register_module("stages", nn::ModuleList());
  // Stage 1 reaches stride 4 through two stride-2 convolutions.
  const int64_t stem = std::max<int64_t>(1, ch[0] / 2);
  nn::Sequential first;
  conv_norm_act(first, 3, stem, 2, g);
  conv_norm_act(first, stem, ch[0], 2, g);
  conv_norm_act(first, ch[0], ch[0], 1, g);
  stages_->push_back(first);
  for (size_t i = 1; i < ch.size(); ++i) {
    nn::Sequential stage;
    conv_norm_act(stage, ch[i - 1], ch[i], 2, g);
    conv_norm_act(stage, ch[i], ch[i], 1, g);
    stages_->push_back(stage);
  }
}

FeaturePyramid BackboneImpl::forward(const torch::Tensor& image) {
  DIFFDEPTH_REQUIRE(image.dim() == 4 && image.size(1) == 3, "image must be [B,3,H,W]");
  const auto h = image.size(2), w = image.size(3);
  if (h < 32 || w < 32) throw InvalidArgument("image smaller than 32x32");
  if (h % 32 != 0 || w % 32 != 0) throw InvalidArgument("image dims must be multiples of 32");
  auto x = standardize_image(image, options_.image_mean, options_.image_std);
  FeaturePyramid out;
  for (size_t i = 0; i < stages_->size(); ++i) {
    x = stages_[i]->as<nn::Sequential>()->forward(x);
    out.levels[i] = x;
  }
  return out;
}

ConditionAggregatorImpl::ConditionAggregatorImpl(const AggregatorOptions& options)
    : options_(options) {
  DIFFDEPTH_REQUIRE(options_.out_channels > 0, "condition channels must be positive");
  laterals_ = register_module("laterals", nn::ModuleList());
  for (auto c : options_.in_channels) {
    laterals_->push_back(nn::Conv2d(nn::Conv2dOptions(c, options_.out_channels, 1)));
  }
  smooth_ = register_module(
      "smooth",
      nn::Conv2d(nn::Conv2dOptions(options_.out_channels, options_.out_channels, 3).padding(1)));
}

torch::Tensor ConditionAggregatorImpl::forward(const FeaturePyramid& pyramid) {
  const auto& lv = pyramid.levels;
  for (size_t i = 0; i < lv.size(); ++i) {
    DIFFDEPTH_REQUIRE(lv[i].defined() && lv[i].dim() == 4, "pyramid level missing or not NCHW");
    DIFFDEPTH_REQUIRE(lv[i].size(1) == options_.in_channels[i], "pyramid channel mismatch");
    if (i > 0) {
      const bool consistent = lv[i].size(0) == lv[0].size(0) &&
                              lv[i].size(2) * (1 << i) == lv[0].size(2) &&
                              lv[i].size(3) * (1 << i) == lv[0].size(3);
      if (!consistent) throw InvalidArgument("pyramid level shapes are inconsistent");
    }
  }
  auto top = laterals_[3]->as<nn::Conv2d>()->forward(lv[3]);
  for (int i = 2; i >= 0; --i) {
    auto lateral = laterals_[static_cast<size_t>(i)]->as<nn::Conv2d>()->forward(lv[static_cast<size_t>(i)]);
    auto up = F::interpolate(top, F::InterpolateFuncOptions()
                                      .size(std::vector<int64_t>{lateral.size(2), lateral.size(3)})
                                      .mode(torch::kNearest));
    top = lateral + up;
  }
  return smooth_(top);
}

}  // namespace diffdepth
