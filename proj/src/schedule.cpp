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

#include "diffdepth/schedule.hpp"

#include <cmath>
#include <string>

#include <torch/torch.h>

#include "diffdepth/errors.hpp"

namespace diffdepth {

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  DIFFDEPTH_REQUIRE(!betas.empty(), "schedule needs at least one step");
  std::vector<double> alpha_bars(betas.size() + 1);
  alpha_bars[0] = 1.0;
  long double running = 1.0L;
  for (size_t i = 0; i < betas.size(); ++i) {
    const double b = betas[i];
    if (!(b > 0.0 && b < 1.0)) {
      throw InvalidArgument("beta_" + std::to_string(i + 1) + " = " + std::to_string(b) +
                            " outside (0, 1)");
    }
    running *= 1.0L - static_cast<long double>(b);
    alpha_bars[i + 1] = static_cast<double>(running);
  }
  return NoiseSchedule(std::move(betas), std::move(alpha_bars));
}

double NoiseSchedule::beta(int64_t t) const {
  if (t < 1 || t > steps()) throw InvalidArgument("beta index out of range: " + std::to_string(t));
  return betas_[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int64_t t) const {
  if (t < 0 || t > steps()) {
    throw InvalidArgument("timestep " + std::to_string(t) + " outside [0, " +
                          std::to_string(steps()) + "]");
  }
  return alpha_bars_[static_cast<size_t>(t)];
}

std::pair<torch::Tensor, torch::Tensor> NoiseSchedule::signal_noise_scales(
    const torch::Tensor& t, int64_t rank, torch::ScalarType dtype) const {
  DIFFDEPTH_REQUIRE(t.dim() == 1, "timestep tensor must be 1-D");
  auto tc = t.to(torch::kCPU, torch::kLong).contiguous();
  const auto n = tc.size(0);
  std::vector<double> signal(static_cast<size_t>(n)), noise(static_cast<size_t>(n));
  const auto* tp = tc.data_ptr<int64_t>();
  for (int64_t i = 0; i < n; ++i) {
    const double ab = alpha_bar(tp[i]);
    signal[static_cast<size_t>(i)] = std::sqrt(ab);
    noise[static_cast<size_t>(i)] = std::sqrt(1.0 - ab);
  }
  std::vector<int64_t> shape(static_cast<size_t>(rank), 1);
  shape[0] = n;
  auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  auto s = torch::tensor(signal, opts).view(shape).to(dtype);
  auto z = torch::tensor(noise, opts).view(shape).to(dtype);
  return {s, z};
}

NoiseSchedule make_linear_schedule(int64_t steps, double beta_start, double beta_end) {
  DIFFDEPTH_REQUIRE(steps >= 1, "schedule length must be positive");
  DIFFDEPTH_REQUIRE(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
                    "require 0 < beta_start <= beta_end < 1");
  std::vector<double> betas(static_cast<size_t>(steps));
  for (int64_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[static_cast<size_t>(i)] = beta_start + (beta_end - beta_start) * frac;
  }
  betas.back() = beta_end;
  return NoiseSchedule::from_betas(std::move(betas));
}

torch::Tensor q_sample(const torch::Tensor& x0, int64_t t, const torch::Tensor& eps,
                       const NoiseSchedule& sched) {
  DIFFDEPTH_REQUIRE(x0.sizes() == eps.sizes(), "q_sample: x0 and eps shapes differ");
  const double ab = sched.alpha_bar(t);
  if (t == 0) return x0;
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

torch::Tensor q_sample(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& eps,
                       const NoiseSchedule& sched) {
  DIFFDEPTH_REQUIRE(x0.sizes() == eps.sizes(), "q_sample: x0 and eps shapes differ");
  DIFFDEPTH_REQUIRE(t.dim() == 1 && t.size(0) == x0.size(0),
                    "q_sample: need one timestep per batch element");
  auto [signal, noise] = sched.signal_noise_scales(t, x0.dim(), x0.scalar_type());
  return signal * x0 + noise * eps;
}

Posterior posterior_mean_variance(const torch::Tensor& x0, const torch::Tensor& xt, int64_t t,
                                  const NoiseSchedule& sched) {
  DIFFDEPTH_REQUIRE(x0.sizes() == xt.sizes(), "posterior: x0 and xt shapes differ");
  if (t < 1 || t > sched.steps()) {
    throw InvalidArgument("posterior requires 1 <= t <= T, got t = " + std::to_string(t));
  }
  Posterior out;
  if (t == 1) {
    // alpha_bar(0) == 1: the posterior collapses onto x0.
    out.mean = x0.clone();
    return out;
  }
  const double ab_t = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t - 1);
  const double beta_t = sched.beta(t);
  const double denom = 1.0 - ab_t;
  const double c0 = std::sqrt(ab_prev) * beta_t / denom;
  const double ct = std::sqrt(1.0 - beta_t) * (1.0 - ab_prev) / denom;
  out.mean = c0 * x0 + ct * xt;
  out.variance = (1.0 - ab_prev) / denom * beta_t;
  return out;
}

torch::Tensor ddim_step(const torch::Tensor& xt, const torch::Tensor& x0_hat, int64_t t,
                        int64_t t_prev, const NoiseSchedule& sched) {
  DIFFDEPTH_REQUIRE(xt.sizes() == x0_hat.sizes(), "ddim_step: xt and x0_hat shapes differ");
  if (t < 1 || t > sched.steps()) throw InvalidArgument("ddim_step: t out of range");
  if (t_prev < 0 || t_prev >= t) {
    throw InvalidArgument("ddim_step requires 0 <= t_prev < t, got t = " + std::to_string(t) +
                          ", t_prev = " + std::to_string(t_prev));
  }
  if (t_prev == 0) return x0_hat;
  const double ab_t = sched.alpha_bar(t);
  const double ab_p = sched.alpha_bar(t_prev);
  auto eps_hat = (xt - std::sqrt(ab_t) * x0_hat) / std::sqrt(1.0 - ab_t);
  return std::sqrt(ab_p) * x0_hat + std::sqrt(1.0 - ab_p) * eps_hat;
}

torch::Tensor ddim_step(const torch::Tensor& xt, const torch::Tensor& x0_hat,
                        const torch::Tensor& t, const torch::Tensor& t_prev,
                        const NoiseSchedule& sched) {
  DIFFDEPTH_REQUIRE(xt.sizes() == x0_hat.sizes(), "ddim_step: xt and x0_hat shapes differ");
  DIFFDEPTH_REQUIRE(t.sizes() == t_prev.sizes() && t.dim() == 1 && t.size(0) == xt.size(0),
                    "ddim_step: need one (t, t_prev) pair per batch element");
  auto tc = t.to(torch::kLong);
  auto pc = t_prev.to(torch::kLong);
  DIFFDEPTH_REQUIRE(torch::all(pc < tc).item<bool>() && torch::all(pc >= 0).item<bool>() &&
                        torch::all(tc >= 1).item<bool>(),
                    "ddim_step requires 0 <= t_prev < t");
  auto [sig_t, noise_t] = sched.signal_noise_scales(tc, xt.dim(), xt.scalar_type());
  auto [sig_p, noise_p] = sched.signal_noise_scales(pc, xt.dim(), xt.scalar_type());
  auto eps_hat = (xt - sig_t * x0_hat) / noise_t;
  // noise_p is exactly 0 where t_prev == 0; mask so x0_hat is returned verbatim there.
  auto terminal = (pc == 0).view(sig_p.sizes());
  auto stepped = sig_p * x0_hat + noise_p * eps_hat;
  return torch::where(terminal, x0_hat, stepped);
}

TimestepPlan make_timestep_plan(int64_t train_steps, int64_t k) {
  DIFFDEPTH_REQUIRE(train_steps >= 1, "timestep plan: train steps must be positive");
  if (k < 1 || k > train_steps) {
    throw InvalidArgument("timestep plan requires 1 <= K <= T, got K = " + std::to_string(k));
  }
  const int64_t stride = train_steps / k;
  TimestepPlan plan;
  plan.steps.reserve(static_cast<size_t>(k + 1));
  for (int64_t i = k; i >= 1; --i) plan.steps.push_back(i * stride);
  plan.steps.push_back(0);
  return plan;
}

void validate_plan(const TimestepPlan& plan, const NoiseSchedule& sched) {
  DIFFDEPTH_REQUIRE(plan.steps.size() >= 2, "timestep plan needs at least one step");
  DIFFDEPTH_REQUIRE(plan.steps.back() == 0, "timestep plan must end in 0");
  if (plan.steps.front() > sched.steps()) {
    throw InvalidArgument("timestep plan starts at " + std::to_string(plan.steps.front()) +
                          " beyond schedule length " + std::to_string(sched.steps()));
  }
  for (size_t i = 1; i < plan.steps.size(); ++i) {
    DIFFDEPTH_REQUIRE(plan.steps[i] < plan.steps[i - 1], "timestep plan must strictly decrease");
  }
}

}  // namespace diffdepth
