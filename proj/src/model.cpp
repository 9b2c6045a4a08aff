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

#include "diffdepth/model.hpp"

#include <optional>

#include <torch/torch.h>

#include "diffdepth/errors.hpp"

namespace diffdepth {

torch::Tensor run_denoising(torch::Tensor x, const TimestepPlan& plan, const NoiseSchedule& sched,
                            const X0Predictor& predict, const StepObserver& observer,
                            int64_t grad_from_step) {
  validate_plan(plan, sched);
  const int64_t k = plan.size();
  for (int64_t i = 0; i < k; ++i) {
    const int64_t t = plan.steps[static_cast<size_t>(i)];
    const int64_t t_prev = plan.steps[static_cast<size_t>(i + 1)];
    std::optional<torch::NoGradGuard> no_grad;
    if (i < grad_from_step) no_grad.emplace();
    auto x0_hat = predict(x, t);
    x = ddim_step(x, x0_hat, t, t_prev, sched);
    if (!torch::isfinite(x).all().item<bool>()) {
      throw NumericError("non-finite latent at denoising step " + std::to_string(i) + " (t = " +
                         std::to_string(t) + ")");
    }
    if (observer) observer(i, t_prev, x);
  }
  return x;
}

DepthDiffusionModelImpl::DepthDiffusionModelImpl(const ModelConfig& config)
    : config_(config),
      schedule_(make_linear_schedule(config.schedule.train_steps, config.schedule.beta_start,
                                     config.schedule.beta_end)) {
  BackboneOptions bb;
  bb.channels = config_.backbone_channels;
  bb.image_mean = config_.image_mean;
  bb.image_std = config_.image_std;
  backbone_ = register_module("backbone", Backbone(bb));

  AggregatorOptions ag;
  ag.in_channels = config_.backbone_channels;
  ag.out_channels = config_.condition_dim;
  aggregator_ = register_module("aggregator", ConditionAggregator(ag));

  DenoiserOptions dn;
  dn.latent_dim = config_.latent_dim;
  dn.condition_dim = config_.condition_dim;
  dn.width = config_.denoiser_width;
  dn.time_dim = config_.time_dim;
  dn.train_steps = config_.schedule.train_steps;
  dn.attention_window = config_.attention_window;
  denoiser_ = register_module("denoiser", Denoiser(dn));

  GtEncoderOptions en;
  en.latent_dim = config_.latent_dim;
  en.input_scale = config_.encoder_input_scale;
  encoder_ = register_module("gt_encoder", GtEncoder(en));

  DepthDecoderOptions de;
  de.latent_dim = config_.latent_dim;
  de.hidden = config_.decoder_hidden;
  de.max_depth = config_.max_depth;
  de.init_depth = config_.decoder_init_depth;
  decoder_ = register_module("decoder", DepthDecoder(de));
}

torch::Tensor DepthDiffusionModelImpl::condition(const torch::Tensor& image) {
  return aggregator_->forward(backbone_->forward(image));
}

torch::Tensor DepthDiffusionModelImpl::rollout(const torch::Tensor& condition,
                                               const torch::Tensor& x_T, const TimestepPlan& plan,
                                               int64_t grad_steps, const StepObserver& observer) {
  if (condition.size(0) != x_T.size(0) || condition.size(2) * 2 != x_T.size(2) ||
      condition.size(3) * 2 != x_T.size(3)) {
    throw InvalidArgument("rollout: condition and latent grids do not match");
  }
  auto projected = denoiser_->project_condition(condition);
  const auto batch = x_T.size(0);
  X0Predictor predict = [&](const torch::Tensor& xt, int64_t t) {
    return denoiser_->forward_projected(xt, torch::full({batch}, t, torch::kLong), projected);
  };
  const int64_t grad_from = grad_steps > 0 ? std::max<int64_t>(0, plan.size() - grad_steps) : 0;
  return run_denoising(x_T, plan, schedule_, predict, observer, grad_from);
}

std::vector<int64_t> DepthDiffusionModelImpl::latent_shape(const torch::Tensor& image) const {
  DIFFDEPTH_REQUIRE(image.dim() == 4, "image must be [B,3,H,W]");
  return {image.size(0), config_.latent_dim, image.size(2) / 2, image.size(3) / 2};
}

std::vector<torch::Tensor> DepthDiffusionModelImpl::backbone_parameters() const {
  auto params = backbone_->parameters();
  auto agg = aggregator_->parameters();
  params.insert(params.end(), agg.begin(), agg.end());
  return params;
}

std::vector<torch::Tensor> DepthDiffusionModelImpl::head_parameters() const {
  std::vector<torch::Tensor> params;
  for (const auto& m : {denoiser_->parameters(), encoder_->parameters(), decoder_->parameters()}) {
    params.insert(params.end(), m.begin(), m.end());
  }
  return params;
}

TimestepPlan DepthDiffusionModelImpl::default_plan() const {
  return make_timestep_plan(config_.schedule.train_steps, config_.schedule.infer_steps);
}

}  // namespace diffdepth
