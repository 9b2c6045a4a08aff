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

#pragma once

#include <array>
#include <vector>

#include <torch/nn/module.h>
#include <torch/nn/modules/container/modulelist.h>
#include <torch/nn/modules/container/sequential.h>
#include <torch/nn/modules/conv.h>
#include <torch/nn/pimpl.h>

namespace diffdepth {

inline constexpr std::array<int64_t, 4> kPyramidStrides{4, 8, 16, 32};

/// Feature grids at strides 4, 8, 16, 32 (NCHW).
struct FeaturePyramid {
  std::array<torch::Tensor, 4> levels;
};

struct BackboneOptions {
  std::array<int64_t, 4> channels{32, 64, 128, 256};
  double image_mean = 0.5;
  double image_std = 0.5;
  int64_t norm_groups = 8;
};

/// Four-stage strided convolutional encoder producing a FeaturePyramid.
class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(const BackboneOptions& options);

  /// image [B,3,H,W] with values in [0,1]; H and W must be multiples of 32.
  FeaturePyramid forward(const torch::Tensor& image);

  const BackboneOptions& options() const { return options_; }

 private:
  BackboneOptions options_;
  torch::nn::ModuleList stages_{nullptr};
};
TORCH_MODULE(Backbone);

struct AggregatorOptions {
  std::array<int64_t, 4> in_channels{32, 64, 128, 256};
  int64_t out_channels = 64;
};

/// Top-down aggregation: lateral 1x1 projections summed with nearest-upsampled
/// coarser levels, then a 3x3 smoothing conv on the stride-4 level.
class ConditionAggregatorImpl : public torch::nn::Module {
 public:
  explicit ConditionAggregatorImpl(const AggregatorOptions& options);

  /// Returns the visual condition [B, c, H/4, W/4].
  torch::Tensor forward(const FeaturePyramid& pyramid);

  const AggregatorOptions& options() const { return options_; }

 private:
  AggregatorOptions options_;
  torch::nn::ModuleList laterals_{nullptr};
  torch::nn::Conv2d smooth_{nullptr};
};
TORCH_MODULE(ConditionAggregator);

/// (x - mean) / std per channel.
torch::Tensor standardize_image(const torch::Tensor& image, double mean, double std);

}  // namespace diffdepth
