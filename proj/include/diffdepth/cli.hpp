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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "diffdepth/config.hpp"
#include "diffdepth/metrics.hpp"
#include "diffdepth/sampler.hpp"

namespace diffdepth {

/// Process exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitIo = 3, kExitNumeric = 4 };

/// Generates the train and val splits under `out_root`; returns manifest paths.
std::vector<std::filesystem::path> cmd_synth(const ExperimentConfig& cfg,
                                             const std::filesystem::path& out_root);

struct TrainOptions {
  std::filesystem::path data_root;  ///< contains train/manifest.json
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume;
  /// Stop (and write last.ckpt) after this many iterations.
  std::optional<int64_t> stop_after;
};

void cmd_train(const ExperimentConfig& cfg, const TrainOptions& opts);

struct InferOptions {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> image;  ///< RGB PNG
  std::optional<std::string> id;               ///< sample id inside `split_dir`
  std::filesystem::path split_dir;
  std::filesystem::path out_dir;
  std::optional<int64_t> steps;
  uint64_t seed = 0;
  bool trace = false;
};

/// Writes depth.png, depth_color.png and, with `trace`, the per-step PNGs.
/// A step count other than the checkpoint's training K is reported on `err`.
InferenceTrace cmd_infer(const InferOptions& opts, std::ostream& err);

struct EvalOptions {
  std::optional<std::filesystem::path> checkpoint;
  std::filesystem::path manifest;
  /// Directory of {id}.png depth predictions used instead of a checkpoint.
  std::optional<std::filesystem::path> predictions;
  double cap = 80.0;
  std::optional<int64_t> steps;
  uint64_t seed = 0;
  bool sparse = false;
  bool irmse = false;
  bool silog_x100 = false;
};

EvalReport cmd_eval(const EvalOptions& opts, std::ostream& err);

/// Full command line entry point; maps errors to ExitCode values.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diffdepth
