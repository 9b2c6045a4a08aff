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

#include <functional>
#include <vector>

#include <torch/nn/module.h>
#include <torch/nn/pimpl.h>

#include "diffdepth/codec.hpp"
#include "diffdepth/condition.hpp"
#include "diffdepth/config.hpp"
#include "diffdepth/denoiser.hpp"
#include "diffdepth/schedule.hpp"

namespace diffdepth {

/// Predicts x0 from (x_t, t). Used to plug either the learned denoiser or an
/// oracle into the denoising loop.
using X0Predictor = std::function<torch::Tensor(const torch::Tensor& xt, int64_t t)>;

/// Called after each step with (step index, t_prev, x_{t_prev}).
using StepObserver = std::function<void(int64_t, int64_t, const torch::Tensor&)>;

/// Runs x_T through every (t, t_prev) pair of the plan and returns x_0.
/// Steps with index < `grad_from_step` run without autograd recording.
/// Throws NumericError naming the step if a latent becomes non-finite.
torch::Tensor run_denoising(torch::Tensor x_T, const TimestepPlan& plan, const NoiseSchedule& sched,
                            const X0Predictor& predict, const StepObserver& observer = {},
                            int64_t grad_from_step = 0);

/// Backbone, condition aggregator, denoiser, GT encoder and decoder with the
/// noise schedule they were built for.
class DepthDiffusionModelImpl : public torch::nn::Module {
 public:
  explicit DepthDiffusionModelImpl(const ModelConfig& config);

  /// image [B,3,H,W] -> condition [B,c,H/4,W/4].
  torch::Tensor condition(const torch::Tensor& image);

  /// Full denoising rollout from x_T under the given condition.
  torch::Tensor rollout(const torch::Tensor& condition, const torch::Tensor& x_T,
                        const TimestepPlan& plan, int64_t grad_steps = 0,
                        const StepObserver& observer = {});

  torch::Tensor decode(const torch::Tensor& latent) { return decoder_->forward(latent); }
  torch::Tensor encode_gt(const torch::Tensor& depth, const torch::Tensor& mask) {
    return encoder_->forward(depth, mask);
  }

  /// Latent shape [B, d, H/2, W/2] for an image batch of [B, 3, H, W].
  std::vector<int64_t> latent_shape(const torch::Tensor& image) const;

  /// Parameters of the feature extractor (backbone + aggregator).
  std::vector<torch::Tensor> backbone_parameters() const;
  /// Parameters of the diffusion head (denoiser, GT encoder, decoder).
  std::vector<torch::Tensor> head_parameters() const;

  const ModelConfig& config() const { return config_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  TimestepPlan default_plan() const;

  Backbone& backbone() { return backbone_; }
  ConditionAggregator& aggregator() { return aggregator_; }
  Denoiser& denoiser() { return denoiser_; }
  GtEncoder& encoder() { return encoder_; }
  DepthDecoder& decoder() { return decoder_; }

 private:
  ModelConfig config_;
  NoiseSchedule schedule_;
  Backbone backbone_{nullptr};
  ConditionAggregator aggregator_{nullptr};
  Denoiser denoiser_{nullptr};
  GtEncoder encoder_{nullptr};
  DepthDecoder decoder_{nullptr};
};
TORCH_MODULE(DepthDiffusionModel);

}  // namespace diffdepth
