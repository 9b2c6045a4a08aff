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

// Depth latent space: GT encoder, depth decoder, and mask pooling.
//
// Tensors follow NCHW. Depth maps are [B, 1, H, W] in meters, validity masks
// are bool tensors of the same shape, and latents are [B, d, H/2, W/2].

#pragma once

#include <torch/nn/module.h>
#include <torch/nn/modules/conv.h>
#include <torch/nn/pimpl.h>

namespace diffdepth {

/// clamp(1 / s, max = cap) - 1 for a sigmoid output s in (0, 1).
double depth_from_activation(double s, double cap);

/// Elementwise depth from pre-sigmoid activations.
///
/// Uses the identity 1 / sigmoid(x) - 1 = exp(-x); the result lies in
/// (0, cap - 1]. Activations above 60 are clamped so the depth stays
/// strictly positive in single precision.
torch::Tensor depth_from_logits(const torch::Tensor& logits, double cap);

/// Any-pooling of a bool mask over `factor` x `factor` windows. Accepts
/// [H, W], [B, H, W] or [B, 1, H, W].
torch::Tensor downsample_mask(const torch::Tensor& mask, int64_t factor);

/// Fraction of true cells in a mask.
double mask_density(const torch::Tensor& mask);

struct GtEncoderOptions {
  int64_t latent_dim = 16;
  /// Depth in meters is multiplied by this before entering the network.
  double input_scale = 0.1;
};

/// Bottleneck of 1x1 convolutions mapping GT depth to a latent of half
/// resolution. Each 2x2 pixel block is folded into channels first, so every
/// supervised pixel reaches the latent cell that covers it.
class GtEncoderImpl : public torch::nn::Module {
 public:
  explicit GtEncoderImpl(const GtEncoderOptions& options);

  /// depth [B,1,H,W] meters, mask [B,1,H,W] bool -> latent [B,d,H/2,W/2].
  /// Invalid pixels enter the network as 0.
  torch::Tensor forward(const torch::Tensor& depth, const torch::Tensor& mask);

  const GtEncoderOptions& options() const { return options_; }

 private:
  GtEncoderOptions options_;
  torch::nn::Conv2d reduce_{nullptr};
  torch::nn::Conv2d mid_{nullptr};
  torch::nn::Conv2d expand_{nullptr};
};
TORCH_MODULE(GtEncoder);

struct DepthDecoderOptions {
  int64_t latent_dim = 16;
  int64_t hidden = 16;
  /// Upper bound of the reciprocal (eta); depths lie in (0, max_depth - 1].
  double max_depth = 1e6;
  /// Initial output-layer bias is chosen so a zero latent decodes to this depth.
  double init_depth = 4.0;
};

/// 1x1 conv -> 3x3 stride-2 transposed conv -> 3x3 conv -> sigmoid -> depth.
class DepthDecoderImpl : public torch::nn::Module {
 public:
  explicit DepthDecoderImpl(const DepthDecoderOptions& options);

  /// Pre-sigmoid activations [B,1,H,W].
  torch::Tensor logits(const torch::Tensor& latent);
  /// Metric depth [B,1,H,W]. Throws InvalidArgument on non-finite latents.
  torch::Tensor forward(const torch::Tensor& latent);

  const DepthDecoderOptions& options() const { return options_; }

 private:
  DepthDecoderOptions options_;
  torch::nn::Conv2d project_{nullptr};
  torch::nn::ConvTranspose2d upsample_{nullptr};
  torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(DepthDecoder);

}  // namespace diffdepth
