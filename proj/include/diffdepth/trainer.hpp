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
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/optim/adamw.h>

#include "diffdepth/augment.hpp"
#include "diffdepth/config.hpp"
#include "diffdepth/losses.hpp"
#include "diffdepth/model.hpp"

namespace diffdepth {

enum class LrGroup { kBackbone, kHead };

/// Number of warmup iterations for a run of `total` iterations.
int64_t warmup_iterations(int64_t total, const TrainConfig& cfg);

/// Linear ramp from 0 to the base rate over the warmup, then cosine decay to
/// final_lr at iteration total - 1. The head group is scaled by
/// head_lr_multiplier.
double lr_at(int64_t iteration, int64_t total, const TrainConfig& cfg, LrGroup group);

/// A stacked batch: image [B,3,H,W], depth [B,1,H,W], mask [B,1,H,W] bool.
struct TrainBatch {
  torch::Tensor image;
  torch::Tensor depth;
  torch::Tensor mask;
};

TrainBatch collate(const std::vector<TrainSample>& samples);

/// AdamW with param group 0 = backbone + aggregator, group 1 = head.
std::unique_ptr<torch::optim::AdamW> make_optimizer(DepthDiffusionModel& model,
                                                    const TrainConfig& cfg);

struct StepResult {
  LossBreakdown losses;
  std::vector<int64_t> t_sampled;
  double lr_backbone = 0.0;
  double lr_head = 0.0;
};

/// Noised pair sharing one eps: x_t = q(target, t), x_prev = q(target, t - 1).
struct DiffusionPair {
  torch::Tensor x_t;
  torch::Tensor x_prev;
};
DiffusionPair make_diffusion_pair(const torch::Tensor& target, const torch::Tensor& t,
                                  const torch::Tensor& eps, const NoiseSchedule& sched);

/// DDIM supervision term: the target is detached, so gradients reach the
/// parameters only through the denoiser call at (x_t, t, condition).
torch::Tensor diffusion_term(DepthDiffusionModel& model, const torch::Tensor& target,
                             const torch::Tensor& condition, const torch::Tensor& t,
                             const torch::Tensor& eps);

/// One self-diffusion training iteration. All noise (x_T, t, eps) is drawn
/// from `gen`. When `optimizer` is null the parameters are left untouched.
/// Throws NumericError on a non-finite loss or latent.
StepResult self_diffusion_step(DepthDiffusionModel& model, torch::optim::AdamW* optimizer,
                               const TrainBatch& batch, const TrainConfig& cfg,
                               int64_t iteration, int64_t total, at::Generator& gen);

// ------------------------------------------------------------ checkpoints

inline constexpr int64_t kCheckpointFormatVersion = 1;

struct CheckpointMeta {
  int64_t version = kCheckpointFormatVersion;
  ModelConfig model;
  TrainConfig train;
  std::string config_text;
  int64_t iteration = 0;  ///< iterations completed
  int64_t total = 0;
  uint64_t seed = 0;
  DiffusionTarget arm = DiffusionTarget::kSelf;
  int64_t train_infer_steps = 20;
};

/// Writes atomically (temp file + rename). `optimizer` and `rng_state` are optional.
void save_checkpoint(const std::filesystem::path& path, DepthDiffusionModel& model,
                     torch::optim::AdamW* optimizer, const CheckpointMeta& meta,
                     const torch::Tensor& rng_state = {});

/// Reads only the metadata. Throws IoError on unreadable or corrupt files
/// and ConfigError on a format version mismatch.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  torch::Tensor rng_state;
  std::vector<std::string> warnings;
};

/// Loads parameters (and optimizer state when given) into an existing model.
/// Throws ConfigError when the stored model config differs from the model's.
/// Loading a checkpoint of another arm than `arm` adds a warning.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, DepthDiffusionModel& model,
                                 torch::optim::AdamW* optimizer = nullptr,
                                 std::optional<DiffusionTarget> arm = std::nullopt);

/// Builds a model from the stored config and loads its parameters.
DepthDiffusionModel load_model(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

// ---------------------------------------------------------------- trainer

/// One training-log row.
struct StepRecord {
  int64_t iteration = 0;
  double lr_backbone = 0.0;
  double lr_head = 0.0;
  LossBreakdown losses;
  std::vector<int64_t> t_sampled;
  double wall_ms = 0.0;
  std::string arm;

  nlohmann::json to_json() const;
};

/// Drives self_diffusion_step over a fixed sample set. Batch composition
/// and augmentation are derived from (seed, iteration), so a resumed run
/// replays the same sequence; the noise generator state is checkpointed.
class Trainer {
 public:
  /// `out_dir` receives train.jsonl and checkpoints; empty disables files.
  Trainer(ExperimentConfig config, std::vector<TrainSample> samples,
          std::filesystem::path out_dir = {});

  /// Continues from a checkpoint written by this class.
  void resume(const std::filesystem::path& checkpoint);

  StepRecord step();
  /// Runs until `until` iterations are done (default: all). Writes periodic
  /// checkpoints and final.ckpt when an output directory is set.
  void run(std::optional<int64_t> until = std::nullopt);

  void save(const std::filesystem::path& path);

  int64_t iteration() const { return iteration_; }
  int64_t total() const { return total_; }
  DepthDiffusionModel& model() { return model_; }
  const ExperimentConfig& config() const { return config_; }
  const std::vector<StepRecord>& history() const { return history_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Indices of the samples that form the batch at `iteration`.
  std::vector<int64_t> batch_indices(int64_t iteration) const;

 private:
  void log_line(const nlohmann::json& j);
  void warn(const std::string& message);

  ExperimentConfig config_;
  std::vector<TrainSample> samples_;
  std::filesystem::path out_dir_;
  DepthDiffusionModel model_{nullptr};
  std::unique_ptr<torch::optim::AdamW> optimizer_;
  at::Generator gen_;
  int64_t iteration_ = 0;
  int64_t total_ = 0;
  std::vector<StepRecord> history_;
  std::vector<std::string> warnings_;
  std::ofstream log_;
  bool append_log_ = false;
};

}  // namespace diffdepth
