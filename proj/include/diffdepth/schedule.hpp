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
#include <span>
#include <vector>

#include <torch/types.h>

namespace diffdepth {

/// Variance schedule of the forward noising chain.
///
/// Timesteps are 1-based: beta(t), alpha(t) exist for t in [1, steps()].
/// alpha_bar(t) is defined for t in [0, steps()] with alpha_bar(0) == 1, so
/// t = 0 denotes the clean signal. Immutable after construction.
class NoiseSchedule {
 public:
  /// Builds a schedule from explicit betas (beta_1..beta_T), each in (0, 1).
  static NoiseSchedule from_betas(std::vector<double> betas);

  int64_t steps() const { return static_cast<int64_t>(betas_.size()); }
  double beta(int64_t t) const;
  double alpha(int64_t t) const { return 1.0 - beta(t); }
  double alpha_bar(int64_t t) const;

  std::span<const double> betas() const { return betas_; }
  /// alpha_bar for t = 0..T (size T + 1).
  std::span<const double> alpha_bars() const { return alpha_bars_; }

  /// Gathers sqrt(alpha_bar) and sqrt(1 - alpha_bar) for a batch of timesteps,
  /// shaped [B, 1, ..., 1] to broadcast against a tensor of rank `rank`.
  std::pair<torch::Tensor, torch::Tensor> signal_noise_scales(
      const torch::Tensor& t, int64_t rank, torch::ScalarType dtype) const;

 private:
  NoiseSchedule(std::vector<double> betas, std::vector<double> alpha_bars)
      : betas_(std::move(betas)), alpha_bars_(std::move(alpha_bars)) {}

  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

/// Linear betas from beta_start to beta_end inclusive over `steps` entries.
NoiseSchedule make_linear_schedule(int64_t steps, double beta_start, double beta_end);

/// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps.
torch::Tensor q_sample(const torch::Tensor& x0, int64_t t, const torch::Tensor& eps,
                       const NoiseSchedule& sched);
/// Per-batch-element timesteps; `t` is an int64 tensor of shape [B].
torch::Tensor q_sample(const torch::Tensor& x0, const torch::Tensor& t,
                       const torch::Tensor& eps, const NoiseSchedule& sched);

struct Posterior {
  torch::Tensor mean;
  double variance = 0.0;
};

/// Mean and variance of q(x_{t-1} | x_t, x_0). Requires 1 <= t <= T.
Posterior posterior_mean_variance(const torch::Tensor& x0, const torch::Tensor& xt, int64_t t,
                                  const NoiseSchedule& sched);

/// Deterministic (sigma = 0) DDIM update from t to t_prev given a clean estimate.
torch::Tensor ddim_step(const torch::Tensor& xt, const torch::Tensor& x0_hat, int64_t t,
                        int64_t t_prev, const NoiseSchedule& sched);
/// Batched variant with per-element int64 timesteps of shape [B].
torch::Tensor ddim_step(const torch::Tensor& xt, const torch::Tensor& x0_hat,
                        const torch::Tensor& t, const torch::Tensor& t_prev,
                        const NoiseSchedule& sched);

/// Strictly decreasing inference timesteps ending in a terminal 0.
struct TimestepPlan {
  std::vector<int64_t> steps;

  /// Number of denoising steps (excludes the terminal 0).
  int64_t size() const { return static_cast<int64_t>(steps.size()) - 1; }
};

/// K timesteps k * floor(T / K) for k = K..1, then 0.
TimestepPlan make_timestep_plan(int64_t train_steps, int64_t k);

/// Throws InvalidArgument unless the plan is strictly decreasing, ends in 0,
/// and starts at or below the schedule length.
void validate_plan(const TimestepPlan& plan, const NoiseSchedule& sched);

}  // namespace diffdepth
