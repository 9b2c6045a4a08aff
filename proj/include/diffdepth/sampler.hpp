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
#include <filesystem>
#include <vector>

#include "diffdepth/data.hpp"
#include "diffdepth/metrics.hpp"
#include "diffdepth/model.hpp"

namespace diffdepth {

struct TraceSnapshot {
  int64_t t = 0;        ///< timestep the latent was stepped to
  torch::Tensor depth;  ///< decoded [H,W]
  double wall_ms = 0.0;
};

struct InferenceTrace {
  std::vector<TraceSnapshot> snapshots;  ///< one per step when tracing, else empty
  torch::Tensor depth;                   ///< final [H,W]
  int64_t steps = 0;
  std::vector<double> step_ms;
};

/// Standard-normal x_T of the given shape drawn from `seed`.
torch::Tensor initial_noise(const std::vector<int64_t>& shape, uint64_t seed,
                            torch::ScalarType dtype = torch::kFloat32);

/// Deterministic DDIM inference on one image [3,H,W] (or [1,3,H,W]).
InferenceTrace infer(const torch::Tensor& image, DepthDiffusionModel& model, const TimestepPlan& plan,
                     uint64_t seed, bool trace = false);

/// Writes trace_t{t:04}.png per snapshot plus trace.json.
void export_trace(const std::filesystem::path& dir, const InferenceTrace& trace);

/// Runs infer() over samples and accumulates metrics against dense depth
/// (or the sparse depth when `use_sparse`).
EvalReport evaluate_model(DepthDiffusionModel& model, const std::vector<Sample>& samples,
                          const TimestepPlan& plan, uint64_t seed, double cap,
                          bool use_sparse = false, bool with_irmse = false);

}  // namespace diffdepth
