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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "diffdepth/data.hpp"
#include "diffdepth/losses.hpp"

namespace diffdepth {

struct ScheduleConfig {
  int64_t train_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int64_t infer_steps = 20;

  nlohmann::json to_json() const;
  static ScheduleConfig from_json(const nlohmann::json& j);
};

struct ModelConfig {
  int64_t latent_dim = 16;
  int64_t condition_dim = 64;
  std::array<int64_t, 4> backbone_channels{32, 64, 128, 256};
  int64_t denoiser_width = 32;
  int64_t time_dim = 32;
  int64_t decoder_hidden = 16;
  int64_t attention_window = 0;
  double max_depth = 1e6;
  double decoder_init_depth = 4.0;
  double image_mean = 0.5;
  double image_std = 0.5;
  double encoder_input_scale = 0.1;
  ScheduleConfig schedule;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

enum class DiffusionTarget { kSelf, kGt };
DiffusionTarget parse_diffusion_target(const std::string& name);
std::string to_string(DiffusionTarget t);

struct TrainConfig {
  /// Total optimizer steps; when 0, epochs * ceil(n_samples / batch_size).
  int64_t steps = 500;
  int64_t epochs = 0;
  int64_t batch_size = 2;
  double base_lr = 1e-4;
  double final_lr = 1e-8;
  double warmup_fraction = 0.15;
  double aux_fraction = 0.5;
  double head_lr_multiplier = 10.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double grad_clip = 1.0;
  /// Rollout steps that keep gradients (counted from the last); 0 keeps all.
  int64_t rollout_grad_steps = 0;
  DiffusionTarget diffusion_target = DiffusionTarget::kSelf;
  LossWeights weights;
  double pixel_lambda = 0.85;
  PixelLossMode pixel_mode = PixelLossMode::kAsPrinted;
  /// "dense" trains against full depth, "sparse" against the sparse samples.
  std::string supervision = "dense";
  int64_t checkpoint_every = 100;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct AugmentationConfig {
  bool enabled = false;
  /// 0 means the full input size.
  int64_t crop_h = 0;
  int64_t crop_w = 0;
  double brightness = 0.0;
  double contrast = 0.0;
  double saturation = 0.0;
  double hue = 0.0;
  double scale_min = 1.0;
  double scale_max = 1.0;
  double flip_prob = 0.0;
  double rotation_deg = 0.0;

  nlohmann::json to_json() const;
};

struct DataConfig {
  double sparse_density = 0.04;
  SparsePattern sparse_pattern = SparsePattern::kUniform;
  int64_t n_train = 8;
  int64_t n_val = 2;
  /// Train ids use seeds base_seed + i, val ids val_seed_offset + base_seed + i.
  uint64_t val_seed_offset = 1000000;
};

struct EvalConfig {
  double cap = 80.0;
  bool silog_x100 = false;
  bool irmse = false;
};

/// Everything one experiment needs, parsed from an INI-style text file with
/// sections [scene] [data] [schedule] [model] [train] [augment] [eval].
struct ExperimentConfig {
  SceneSpec scene;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  AugmentationConfig augment;
  EvalConfig eval;
  uint64_t seed = 0;
  /// Whether the file set [experiment] seed explicitly.
  bool seed_set = false;
  /// Verbatim source text; echoed into checkpoints.
  std::string source_text;

  /// Throws ConfigError on unknown keys, malformed values or failed validation.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

}  // namespace diffdepth
