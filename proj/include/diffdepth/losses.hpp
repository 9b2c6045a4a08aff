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

#include <cstdint>
#include <optional>
#include <string>

#include <torch/types.h>

namespace diffdepth {

enum class PixelLossMode {
  /// sqrt(mean(delta^2) + lambda / T^2 * (sum delta)^2) on raw depth error.
  kAsPrinted,
  /// sqrt(mean(e^2) - lambda / T^2 * (sum e)^2) with e = log(pred) - log(gt).
  kScaleInvariantLog,
};

PixelLossMode parse_pixel_loss_mode(const std::string& name);
std::string to_string(PixelLossMode mode);

/// Mean of elementwise squared differences.
torch::Tensor ddim_loss(const torch::Tensor& target, const torch::Tensor& pred);

/// Pixel loss over valid pixels. All valid pixels of the batch form one set
/// of size T. Throws InvalidArgument on an empty mask and, in log mode, on
/// non-positive depth at a valid pixel.
torch::Tensor pixel_loss(const torch::Tensor& pred, const torch::Tensor& gt,
                         const torch::Tensor& mask, double lambda = 0.85,
                         PixelLossMode mode = PixelLossMode::kAsPrinted);

/// Sum over channels of squared latent differences, averaged over valid
/// latent cells. `latent_mask` is bool [B,1,h,w] (or [B,h,w]).
torch::Tensor latent_loss(const torch::Tensor& x0, const torch::Tensor& gt_latent,
                          const torch::Tensor& latent_mask);

/// Masked mean absolute plus masked mean squared depth error.
torch::Tensor aux_depth_loss(const torch::Tensor& pred, const torch::Tensor& gt,
                             const torch::Tensor& mask);

struct LossWeights {
  double ddim = 1.0;
  double pixel = 1.0;
  double latent = 1.0;
};

/// Scalar summary of one optimizer step's losses.
struct LossBreakdown {
  double l_ddim = 0.0;
  double l_pixel = 0.0;
  double l_latent = 0.0;
  double l_aux = 0.0;
  double l_total = 0.0;
  LossWeights weights;
  int64_t valid_count = 0;
};

struct LossTerms {
  torch::Tensor ddim;
  torch::Tensor pixel;
  torch::Tensor latent;
};

struct WeightedLoss {
  torch::Tensor total;  ///< differentiable scalar
  LossBreakdown breakdown;
};

/// weights.ddim * ddim + weights.pixel * pixel + weights.latent * latent,
/// plus aux_depth_loss(pred, gt, mask) when `aux_active`. Throws
/// NumericError if any component is non-finite.
WeightedLoss total_loss(const LossTerms& parts, const LossWeights& weights, bool aux_active,
                        const torch::Tensor& pred, const torch::Tensor& gt,
                        const torch::Tensor& mask);

}  // namespace diffdepth
