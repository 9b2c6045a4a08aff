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

#include "diffdepth/sampler.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include <torch/torch.h>

#include "diffdepth/errors.hpp"

namespace diffdepth {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

torch::Tensor initial_noise(const std::vector<int64_t>& shape, uint64_t seed,
                            torch::ScalarType dtype) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  return torch::randn(shape, gen, torch::TensorOptions().dtype(torch::kFloat32)).to(dtype);
}

InferenceTrace infer(const torch::Tensor& image, DepthDiffusionModel& model, const TimestepPlan& plan,
                     uint64_t seed, bool trace) {
  validate_plan(plan, model->schedule());
  torch::NoGradGuard no_grad;
  auto img = image.dim() == 3 ? image.unsqueeze(0) : image;
  DIFFDEPTH_REQUIRE(img.dim() == 4 && img.size(0) == 1, "infer expects a single image");
  const auto dtype = model->decoder()->parameters().front().scalar_type();
  img = img.to(dtype);

  InferenceTrace out;
  out.steps = plan.size();
  auto cond = model->condition(img);
  auto x_T = initial_noise(model->latent_shape(img), seed, dtype);
  auto last = Clock::now();
  StepObserver observer = [&](int64_t, int64_t t_prev, const torch::Tensor& x) {
    out.step_ms.push_back(elapsed_ms(last));
    if (trace) {
      out.snapshots.push_back({t_prev, model->decode(x).squeeze(0).squeeze(0), out.step_ms.back()});
    }
    last = Clock::now();
  };
  auto x0 = model->rollout(cond, x_T, plan, 0, observer);
  out.depth = model->decode(x0).squeeze(0).squeeze(0);
  return out;
}

void export_trace(const std::filesystem::path& dir, const InferenceTrace& trace) {
  nlohmann::json index{{"steps", trace.steps}, {"snapshots", nlohmann::json::array()}};
  for (const auto& snap : trace.snapshots) {
    char name[32];
    std::snprintf(name, sizeof(name), "trace_t%04lld.png", static_cast<long long>(snap.t));
    write_depth_png(dir / name, clamp_to_png_range(snap.depth), torch::ones_like(snap.depth, torch::kBool));
    index["snapshots"].push_back({{"t", snap.t}, {"file", name}, {"wall_ms", snap.wall_ms}});
  }
  std::ofstream out(dir / "trace.json");
  if (!out) throw IoError("cannot write trace index in " + dir.string());
  out << index.dump(2) << "\n";
}

EvalReport evaluate_model(DepthDiffusionModel& model, const std::vector<Sample>& samples,
                          const TimestepPlan& plan, uint64_t seed, double cap, bool use_sparse,
                          bool with_irmse) {
  MetricAccumulator acc(cap, with_irmse);
  for (const auto& s : samples) {
    auto result = infer(s.image, model, plan, seed);
    if (use_sparse) {
      acc.add(result.depth, s.sparse_depth, s.sparse_mask);
    } else {
      acc.add(result.depth, s.depth, s.depth > 0);
    }
  }
  return acc.finalize();
}

}  // namespace diffdepth
