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

#include <torch/nn/module.h>
#include <torch/nn/modules/conv.h>
#include <torch/nn/modules/linear.h>
#include <torch/nn/modules/normalization.h>
#include <torch/nn/pimpl.h>

namespace diffdepth {

/// Sinusoidal embedding: [sin(t w_0), cos(t w_0), sin(t w_1), ...] with
/// w_i = 10000^(-2i/e). Returns float64 of shape [e].
torch::Tensor time_embedding(int64_t t, int64_t dim);
/// Batched form: `t` is int64 [B], result float64 [B, e].
torch::Tensor time_embedding(const torch::Tensor& t, int64_t dim);

struct DenoiserOptions {
  int64_t latent_dim = 16;
  int64_t condition_dim = 64;
  int64_t width = 32;
  int64_t time_dim = 32;
  int64_t train_steps = 1000;
  /// 0 selects full attention over the latent grid; otherwise attention is
  /// restricted to non-overlapping square windows of this side length.
  int64_t attention_window = 0;
  int64_t norm_groups = 8;
};

/// Intermediate tensors of one denoiser pass, exposed for inspection.
struct DenoiserTrace {
  torch::Tensor fused;      ///< fusion-block output in latent space [B,d,h,w]
  torch::Tensor attention;  ///< attention weights [B*windows, n, n]
  torch::Tensor output;     ///< predicted x0 [B,d,h,w]
};

/// Monocular conditioned denoising block: predicts the clean latent x0 from
/// (x_t, t, visual condition).
///
/// The condition is upsampled x2 (nearest) and projected to d channels by a
/// 3x3 conv, summed with x_t, passed through a conv block modulated by the
/// time embedding (scale/shift), a residual self-attention layer and a 1x1
/// head back to d channels. A refinement block (1x1-3x3-1x1 bottleneck
/// with squeeze-excite channel attention) is added residually through a
/// per-channel scale that starts at zero.
class DenoiserImpl : public torch::nn::Module {
 public:
  explicit DenoiserImpl(const DenoiserOptions& options);

  /// Local projection of the condition [B,c,h/2,w/2] to [B,d,h,w]. Independent
  /// of t and x_t, so a rollout can compute it once.
  torch::Tensor project_condition(const torch::Tensor& condition);

  /// Prediction from an already projected condition. `t` is int64 [B].
  torch::Tensor forward_projected(const torch::Tensor& xt, const torch::Tensor& t,
                                  const torch::Tensor& projected, DenoiserTrace* trace = nullptr);

  torch::Tensor predict_x0(const torch::Tensor& xt, const torch::Tensor& t,
                           const torch::Tensor& condition);
  torch::Tensor predict_x0(const torch::Tensor& xt, int64_t t, const torch::Tensor& condition);

  const DenoiserOptions& options() const { return options_; }

  /// Per-channel scale on the refinement branch (zero at construction).
  torch::Tensor& refine_scale() { return refine_scale_; }

 private:
  torch::Tensor attend(const torch::Tensor& h, torch::Tensor* weights);

  DenoiserOptions options_;
  torch::nn::Conv2d cond_proj_{nullptr};
  torch::nn::Conv2d fuse_conv_{nullptr};
  torch::nn::GroupNorm fuse_norm_{nullptr};
  torch::nn::Linear time_hidden_{nullptr};
  torch::nn::Linear time_out_{nullptr};
  torch::nn::Conv2d attn_qkv_{nullptr};
  torch::nn::Conv2d attn_out_{nullptr};
  torch::nn::Conv2d head_{nullptr};
  torch::nn::Conv2d bottleneck_in_{nullptr};
  torch::nn::Conv2d bottleneck_mid_{nullptr};
  torch::nn::Conv2d bottleneck_out_{nullptr};
  torch::nn::Linear se_reduce_{nullptr};
  torch::nn::Linear se_expand_{nullptr};
  torch::Tensor refine_scale_;
};
TORCH_MODULE(Denoiser);

}  // namespace diffdepth
