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


#include "diffdepth/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>

#include <torch/torch.h>

#include "diffdepth/codec.hpp"
#include "diffdepth/errors.hpp"

namespace diffdepth {

namespace {

constexpr uint32_t kBatchStream = 1;
constexpr uint32_t kAugmentStream = 2;

std::mt19937_64 derived_rng(uint64_t seed, uint32_t stream, int64_t a, int64_t b = 0) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), stream,
                    static_cast<uint32_t>(a), static_cast<uint32_t>(static_cast<uint64_t>(a) >> 32),
                    static_cast<uint32_t>(b)};
  return std::mt19937_64(seq);
}

void set_group_lr(torch::optim::AdamW& opt, size_t group, double lr) {
  static_cast<torch::optim::AdamWOptions&>(opt.param_groups().at(group).options()).lr(lr);
}

}  // namespace

int64_t warmup_iterations(int64_t total, const TrainConfig& cfg) {
  DIFFDEPTH_REQUIRE(total >= 2, "a training run needs at least 2 iterations");
  const auto w = static_cast<int64_t>(std::llround(cfg.warmup_fraction * static_cast<double>(total)));
  return std::clamp<int64_t>(w, 1, total - 1);
}

double lr_at(int64_t iteration, int64_t total, const TrainConfig& cfg, LrGroup group) {
  if (iteration < 0 || iteration >= total) {
    throw InvalidArgument("iteration " + std::to_string(iteration) + " outside [0, " +
                          std::to_string(total) + ")");
  }
  const int64_t warm = warmup_iterations(total, cfg);
  double lr;
  if (iteration < warm) {
    lr = cfg.base_lr * static_cast<double>(iteration) / static_cast<double>(warm);
  } else {
    const int64_t span = total - 1 - warm;
    const double p = span > 0 ? static_cast<double>(iteration - warm) / static_cast<double>(span) : 0.0;
    lr = cfg.final_lr + (cfg.base_lr - cfg.final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * p));
  }
  return group == LrGroup::kHead ? lr * cfg.head_lr_multiplier : lr;
}

TrainBatch collate(const std::vector<TrainSample>& samples) {
  DIFFDEPTH_REQUIRE(!samples.empty(), "empty batch");
  std::vector<torch::Tensor> img, dep, msk;
  for (const auto& s : samples) {
    img.push_back(s.image.to(torch::kFloat32));
    dep.push_back(s.depth.to(torch::kFloat32).unsqueeze(0));
    msk.push_back(s.mask.to(torch::kBool).unsqueeze(0));
  }
  return {torch::stack(img), torch::stack(dep), torch::stack(msk)};
}

std::unique_ptr<torch::optim::AdamW> make_optimizer(DepthDiffusionModel& model,
                                                    const TrainConfig& cfg) {
  auto options = [&](double lr) {
    return std::make_unique<torch::optim::AdamWOptions>(
        torch::optim::AdamWOptions(lr).betas({cfg.beta1, cfg.beta2}).weight_decay(cfg.weight_decay));
  };
  std::vector<torch::optim::OptimizerParamGroup> groups;
  groups.emplace_back(model->backbone_parameters(), options(cfg.base_lr));
  groups.emplace_back(model->head_parameters(), options(cfg.base_lr * cfg.head_lr_multiplier));
  return std::make_unique<torch::optim::AdamW>(std::move(groups),
                                               torch::optim::AdamWOptions(cfg.base_lr));
}

DiffusionPair make_diffusion_pair(const torch::Tensor& target, const torch::Tensor& t,
                                  const torch::Tensor& eps, const NoiseSchedule& sched) {
  return {q_sample(target, t, eps, sched), q_sample(target, t - 1, eps, sched)};
}

torch::Tensor diffusion_term(DepthDiffusionModel& model, const torch::Tensor& target,
                             const torch::Tensor& condition, const torch::Tensor& t,
                             const torch::Tensor& eps) {
  const auto& sched = model->schedule();
  auto pair = make_diffusion_pair(target.detach(), t, eps, sched);
  auto x0_hat = model->denoiser()->predict_x0(pair.x_t, t, condition);
  return ddim_loss(pair.x_prev, ddim_step(pair.x_t, x0_hat, t, t - 1, sched));
}

StepResult self_diffusion_step(DepthDiffusionModel& model, torch::optim::AdamW* optimizer,
                               const TrainBatch& batch, const TrainConfig& cfg,
                               int64_t iteration, int64_t total, at::Generator& gen) {
  DIFFDEPTH_REQUIRE(batch.image.dim() == 4 && batch.image.size(0) > 0, "batch must be [B,3,H,W]");
  const auto per_sample = batch.mask.flatten(1).sum(1);
  DIFFDEPTH_REQUIRE((per_sample > 0).all().item<bool>(), "every sample needs a valid pixel");
  const auto& sched = model->schedule();
  const int64_t B = batch.image.size(0);

  StepResult result;
  result.lr_backbone = lr_at(iteration, total, cfg, LrGroup::kBackbone);
  result.lr_head = lr_at(iteration, total, cfg, LrGroup::kHead);

  auto cond = model->condition(batch.image);
  auto x_T = torch::randn(model->latent_shape(batch.image), gen);
  auto x0_ref = model->rollout(cond, x_T, model->default_plan(), cfg.rollout_grad_steps);
  auto pred = model->decode(x0_ref);

  LossTerms terms;
  terms.pixel = pixel_loss(pred, batch.depth, batch.mask, cfg.pixel_lambda, cfg.pixel_mode);
  auto gt_latent = model->encode_gt(batch.depth, batch.mask);
  terms.latent = latent_loss(x0_ref, gt_latent, downsample_mask(batch.mask, 2));

  const auto& target = cfg.diffusion_target == DiffusionTarget::kSelf ? x0_ref : gt_latent;
  auto t = torch::randint(1, sched.steps() + 1, {B}, gen, torch::kLong);
  auto eps = torch::randn(target.sizes(), gen);
  terms.ddim = diffusion_term(model, target, cond, t, eps);

  const bool aux = static_cast<double>(iteration) < cfg.aux_fraction * static_cast<double>(total);
  auto loss = total_loss(terms, cfg.weights, aux, pred, batch.depth, batch.mask);
  result.losses = loss.breakdown;
  auto t_acc = t.accessor<int64_t, 1>();
  for (int64_t i = 0; i < B; ++i) result.t_sampled.push_back(t_acc[i]);

  if (optimizer != nullptr) {
    optimizer->zero_grad();
    loss.total.backward();
    torch::nn::utils::clip_grad_norm_(model->parameters(), cfg.grad_clip);
    set_group_lr(*optimizer, 0, result.lr_backbone);
    set_group_lr(*optimizer, 1, result.lr_head);
    optimizer->step();
  }
  return result;
}

nlohmann::json StepRecord::to_json() const {
  return {{"iteration", iteration},
          {"lr_backbone", lr_backbone},
          {"lr_head", lr_head},
          {"l_ddim", losses.l_ddim},
          {"l_pixel", losses.l_pixel},
          {"l_latent", losses.l_latent},
          {"l_aux", losses.l_aux},
          {"l_total", losses.l_total},
          {"t_sampled", t_sampled},
          {"wall_ms", wall_ms},
          {"arm", arm}};
}

Trainer::Trainer(ExperimentConfig config, std::vector<TrainSample> samples,
                 std::filesystem::path out_dir)
    : config_(std::move(config)),
      samples_(std::move(samples)),
      out_dir_(std::move(out_dir)),
      gen_(at::make_generator<at::CPUGeneratorImpl>(config_.seed)) {
  config_.validate();
  DIFFDEPTH_REQUIRE(!samples_.empty(), "no training samples");
  const auto n = static_cast<int64_t>(samples_.size());
  const auto& tc = config_.train;
  total_ = tc.steps > 0 ? tc.steps : tc.epochs * ((n + tc.batch_size - 1) / tc.batch_size);
  DIFFDEPTH_REQUIRE(total_ >= 2, "training needs at least 2 iterations");
  torch::manual_seed(config_.seed);
  model_ = DepthDiffusionModel(config_.model);
  optimizer_ = make_optimizer(model_, tc);
  if (!out_dir_.empty()) {
    std::filesystem::create_directories(out_dir_);
  }
}

void Trainer::log_line(const nlohmann::json& j) {
  if (out_dir_.empty()) return;
  if (!log_.is_open()) {
    log_.open(out_dir_ / "train.jsonl", append_log_ ? std::ios::app : std::ios::trunc);
    if (!log_) throw IoError("cannot open " + (out_dir_ / "train.jsonl").string());
    log_ << nlohmann::json{{"event", "config"}, {"text", config_.source_text}}.dump() << "\n";
  }
  log_ << j.dump() << "\n";
  log_.flush();
}

void Trainer::warn(const std::string& message) {
  warnings_.push_back(message);
  std::cerr << "warning: " << message << "\n";
  log_line({{"event", "warning"}, {"message", message}});
}

void Trainer::resume(const std::filesystem::path& checkpoint) {
  append_log_ = true;
  auto loaded = load_checkpoint(checkpoint, model_, optimizer_.get(), config_.train.diffusion_target);
  if (loaded.meta.total != total_) {
    throw ConfigError("checkpoint was written for " + std::to_string(loaded.meta.total) +
                      " iterations, config asks for " + std::to_string(total_));
  }
  iteration_ = loaded.meta.iteration;
  if (loaded.rng_state.defined()) {
    gen_.set_state(loaded.rng_state);
  }
  for (const auto& w : loaded.warnings) warn(w);
  // Rows past the checkpoint are replayed by the resumed run.
  history_.clear();
}

std::vector<int64_t> Trainer::batch_indices(int64_t iteration) const {
  const auto n = static_cast<int64_t>(samples_.size());
  const int64_t bs = config_.train.batch_size;
  std::vector<int64_t> out;
  int64_t cached_epoch = -1;
  std::vector<int64_t> perm(static_cast<size_t>(n));
  for (int64_t j = 0; j < bs; ++j) {
    const int64_t pos = iteration * bs + j;
    const int64_t epoch = pos / n;
    if (epoch != cached_epoch) {
      std::iota(perm.begin(), perm.end(), 0);
      auto rng = derived_rng(config_.seed, kBatchStream, epoch);
      std::shuffle(perm.begin(), perm.end(), rng);
      cached_epoch = epoch;
    }
    out.push_back(perm[static_cast<size_t>(pos % n)]);
  }
  return out;
}

StepRecord Trainer::step() {
  DIFFDEPTH_REQUIRE(iteration_ < total_, "training already finished");
  const auto start = std::chrono::steady_clock::now();
  std::vector<TrainSample> picked;
  const auto idx = batch_indices(iteration_);
  for (size_t j = 0; j < idx.size(); ++j) {
    const auto& s = samples_[static_cast<size_t>(idx[j])];
    if (config_.augment.enabled) {
      auto rng = derived_rng(config_.seed, kAugmentStream, iteration_, static_cast<int64_t>(j));
      picked.push_back(augment(s, config_.augment, rng));
    } else {
      picked.push_back(s);
    }
  }
  auto result = self_diffusion_step(model_, optimizer_.get(), collate(picked), config_.train,
                                    iteration_, total_, gen_);
  StepRecord rec;
  rec.iteration = iteration_;
  rec.lr_backbone = result.lr_backbone;
  rec.lr_head = result.lr_head;
  rec.losses = result.losses;
  rec.t_sampled = std::move(result.t_sampled);
  rec.arm = to_string(config_.train.diffusion_target);
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  ++iteration_;
  log_line(rec.to_json());
  history_.push_back(rec);
  return rec;
}

void Trainer::run(std::optional<int64_t> until) {
  const int64_t stop = std::min(until.value_or(total_), total_);
  const int64_t every = config_.train.checkpoint_every;
  while (iteration_ < stop) {
    step();
    if (!out_dir_.empty() && every > 0 && iteration_ % every == 0 && iteration_ < total_) {
      save(out_dir_ / "last.ckpt");
    }
  }
  if (out_dir_.empty()) return;
  save(out_dir_ / (iteration_ == total_ ? "final.ckpt" : "last.ckpt"));
}

void Trainer::save(const std::filesystem::path& path) {
  CheckpointMeta meta;
  meta.model = config_.model;
  meta.train = config_.train;
  meta.config_text = config_.source_text;
  meta.iteration = iteration_;
  meta.total = total_;
  meta.seed = config_.seed;
  meta.arm = config_.train.diffusion_target;
  meta.train_infer_steps = config_.model.schedule.infer_steps;
  save_checkpoint(path, model_, optimizer_.get(), meta, gen_.get_state());
}

}  // namespace diffdepth
