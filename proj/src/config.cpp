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

#include "diffdepth/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "diffdepth/errors.hpp"

namespace diffdepth {

namespace pt = boost::property_tree;

namespace {

class IniReader {
 public:
  explicit IniReader(const pt::ptree& tree) : tree_(tree) {}

  template <typename T>
  void get(const std::string& section, const std::string& key, T& out) {
    const std::string path = section + "." + key;
    used_.insert(path);
    auto node = tree_.get_child_optional(pt::ptree::path_type(path, '.'));
    if (!node) return;
    const std::string raw = node->data();
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (raw == "true" || raw == "1" || raw == "yes") {
          out = true;
        } else if (raw == "false" || raw == "0" || raw == "no") {
          out = false;
        } else {
          throw std::invalid_argument(raw);
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        out = raw;
      } else if constexpr (std::is_same_v<T, uint8_t>) {
        out = static_cast<uint8_t>(std::stoul(raw));
      } else if constexpr (std::is_integral_v<T>) {
        size_t pos = 0;
        const long long v = std::stoll(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        out = static_cast<T>(v);
      } else {
        size_t pos = 0;
        const double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        out = static_cast<T>(v);
      }
    } catch (const std::exception&) {
      throw ConfigError("cannot parse " + path + " = '" + raw + "'");
    }
  }

  template <size_t N>
  void get_list(const std::string& section, const std::string& key, std::array<int64_t, N>& out) {
    std::string raw;
    get(section, key, raw);
    if (raw.empty()) return;
    std::stringstream ss(raw);
    std::string item;
    size_t i = 0;
    while (std::getline(ss, item, ',')) {
      if (i >= N) throw ConfigError(section + "." + key + " has more than " + std::to_string(N) + " entries");
      try {
        out[i++] = std::stoll(item);
      } catch (const std::exception&) {
        throw ConfigError("cannot parse " + section + "." + key + " entry '" + item + "'");
      }
    }
    if (i != N) throw ConfigError(section + "." + key + " needs " + std::to_string(N) + " entries");
  }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError("key outside any section: " + section);
      }
      for (const auto& kv : body) {
        const std::string path = section + "." + kv.first;
        if (!used_.count(path)) throw ConfigError("unknown config key: " + path);
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> used_;
};

}  // namespace

nlohmann::json ScheduleConfig::to_json() const {
  return {{"train_steps", train_steps},
          {"beta_start", beta_start},
          {"beta_end", beta_end},
          {"infer_steps", infer_steps}};
}

ScheduleConfig ScheduleConfig::from_json(const nlohmann::json& j) {
  ScheduleConfig s;
  s.train_steps = j.at("train_steps").get<int64_t>();
  s.beta_start = j.at("beta_start").get<double>();
  s.beta_end = j.at("beta_end").get<double>();
  s.infer_steps = j.at("infer_steps").get<int64_t>();
  return s;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"latent_dim", latent_dim},
          {"condition_dim", condition_dim},
          {"backbone_channels", backbone_channels},
          {"denoiser_width", denoiser_width},
          {"time_dim", time_dim},
          {"decoder_hidden", decoder_hidden},
          {"attention_window", attention_window},
          {"max_depth", max_depth},
          {"decoder_init_depth", decoder_init_depth},
          {"image_mean", image_mean},
          {"image_std", image_std},
          {"encoder_input_scale", encoder_input_scale},
          {"schedule", schedule.to_json()}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.latent_dim = j.at("latent_dim").get<int64_t>();
  m.condition_dim = j.at("condition_dim").get<int64_t>();
  m.backbone_channels = j.at("backbone_channels").get<std::array<int64_t, 4>>();
  m.denoiser_width = j.at("denoiser_width").get<int64_t>();
  m.time_dim = j.at("time_dim").get<int64_t>();
  m.decoder_hidden = j.at("decoder_hidden").get<int64_t>();
  m.attention_window = j.at("attention_window").get<int64_t>();
  m.max_depth = j.at("max_depth").get<double>();
  m.decoder_init_depth = j.at("decoder_init_depth").get<double>();
  m.image_mean = j.at("image_mean").get<double>();
  m.image_std = j.at("image_std").get<double>();
  m.encoder_input_scale = j.at("encoder_input_scale").get<double>();
  m.schedule = ScheduleConfig::from_json(j.at("schedule"));
  return m;
}

DiffusionTarget parse_diffusion_target(const std::string& name) {
  if (name == "self") return DiffusionTarget::kSelf;
  if (name == "gt") return DiffusionTarget::kGt;
  throw ConfigError("unknown diffusion target: " + name + " (expected self or gt)");
}

std::string to_string(DiffusionTarget t) { return t == DiffusionTarget::kSelf ? "self" : "gt"; }

nlohmann::json TrainConfig::to_json() const {
  return {{"steps", steps},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"base_lr", base_lr},
          {"final_lr", final_lr},
          {"warmup_fraction", warmup_fraction},
          {"aux_fraction", aux_fraction},
          {"head_lr_multiplier", head_lr_multiplier},
          {"beta1", beta1},
          {"beta2", beta2},
          {"weight_decay", weight_decay},
          {"grad_clip", grad_clip},
          {"rollout_grad_steps", rollout_grad_steps},
          {"diffusion_target", to_string(diffusion_target)},
          {"lambda_ddim", weights.ddim},
          {"lambda_pixel", weights.pixel},
          {"lambda_latent", weights.latent},
          {"pixel_lambda", pixel_lambda},
          {"pixel_mode", to_string(pixel_mode)},
          {"supervision", supervision},
          {"checkpoint_every", checkpoint_every}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig t;
  t.steps = j.at("steps").get<int64_t>();
  t.epochs = j.at("epochs").get<int64_t>();
  t.batch_size = j.at("batch_size").get<int64_t>();
  t.base_lr = j.at("base_lr").get<double>();
  t.final_lr = j.at("final_lr").get<double>();
  t.warmup_fraction = j.at("warmup_fraction").get<double>();
  t.aux_fraction = j.at("aux_fraction").get<double>();
  t.head_lr_multiplier = j.at("head_lr_multiplier").get<double>();
  t.beta1 = j.at("beta1").get<double>();
  t.beta2 = j.at("beta2").get<double>();
  t.weight_decay = j.at("weight_decay").get<double>();
  t.grad_clip = j.at("grad_clip").get<double>();
  t.rollout_grad_steps = j.at("rollout_grad_steps").get<int64_t>();
  t.diffusion_target = parse_diffusion_target(j.at("diffusion_target").get<std::string>());
  t.weights.ddim = j.at("lambda_ddim").get<double>();
  t.weights.pixel = j.at("lambda_pixel").get<double>();
  t.weights.latent = j.at("lambda_latent").get<double>();
  t.pixel_lambda = j.at("pixel_lambda").get<double>();
  t.pixel_mode = parse_pixel_loss_mode(j.at("pixel_mode").get<std::string>());
  t.supervision = j.at("supervision").get<std::string>();
  t.checkpoint_every = j.at("checkpoint_every").get<int64_t>();
  return t;
}

nlohmann::json AugmentationConfig::to_json() const {
  return {{"enabled", enabled},       {"crop_h", crop_h},         {"crop_w", crop_w},
          {"brightness", brightness}, {"contrast", contrast},     {"saturation", saturation},
          {"hue", hue},               {"scale_min", scale_min},   {"scale_max", scale_max},
          {"flip_prob", flip_prob},   {"rotation_deg", rotation_deg}};
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  IniReader r(tree);
  ExperimentConfig c;
  c.source_text = text;
  r.get("experiment", "seed", c.seed);
  c.seed_set = static_cast<bool>(tree.get_child_optional("experiment.seed"));

  auto& s = c.scene;
  r.get("scene", "height", s.height);
  r.get("scene", "width", s.width);
  r.get("scene", "min_objects", s.min_objects);
  r.get("scene", "max_objects", s.max_objects);
  r.get("scene", "ground_plane", s.ground_plane);
  r.get("scene", "kinds", s.kinds);
  r.get("scene", "d_min", s.d_min);
  r.get("scene", "d_max", s.d_max);
  r.get("scene", "camera_height", s.camera_height);
  r.get("scene", "focal_scale", s.focal_scale);
  r.get("scene", "horizon", s.horizon);

  auto& d = c.data;
  std::string pattern = to_string(d.sparse_pattern);
  r.get("data", "sparse_density", d.sparse_density);
  r.get("data", "sparse_pattern", pattern);
  r.get("data", "n_train", d.n_train);
  r.get("data", "n_val", d.n_val);
  r.get("data", "val_seed_offset", d.val_seed_offset);

  auto& sc = c.model.schedule;
  r.get("schedule", "train_steps", sc.train_steps);
  r.get("schedule", "beta_start", sc.beta_start);
  r.get("schedule", "beta_end", sc.beta_end);
  r.get("schedule", "infer_steps", sc.infer_steps);

  auto& m = c.model;
  r.get("model", "latent_dim", m.latent_dim);
  r.get("model", "condition_dim", m.condition_dim);
  r.get_list("model", "backbone_channels", m.backbone_channels);
  r.get("model", "denoiser_width", m.denoiser_width);
  r.get("model", "time_dim", m.time_dim);
  r.get("model", "decoder_hidden", m.decoder_hidden);
  r.get("model", "attention_window", m.attention_window);
  r.get("model", "max_depth", m.max_depth);
  r.get("model", "decoder_init_depth", m.decoder_init_depth);
  r.get("model", "image_mean", m.image_mean);
  r.get("model", "image_std", m.image_std);
  r.get("model", "encoder_input_scale", m.encoder_input_scale);

  auto& t = c.train;
  std::string target = to_string(t.diffusion_target);
  std::string mode = to_string(t.pixel_mode);
  r.get("train", "steps", t.steps);
  r.get("train", "epochs", t.epochs);
  r.get("train", "batch_size", t.batch_size);
  r.get("train", "base_lr", t.base_lr);
  r.get("train", "final_lr", t.final_lr);
  r.get("train", "warmup_fraction", t.warmup_fraction);
  r.get("train", "aux_fraction", t.aux_fraction);
  r.get("train", "head_lr_multiplier", t.head_lr_multiplier);
  r.get("train", "beta1", t.beta1);
  r.get("train", "beta2", t.beta2);
  r.get("train", "weight_decay", t.weight_decay);
  r.get("train", "grad_clip", t.grad_clip);
  r.get("train", "rollout_grad_steps", t.rollout_grad_steps);
  r.get("train", "diffusion_target", target);
  r.get("train", "lambda_ddim", t.weights.ddim);
  r.get("train", "lambda_pixel", t.weights.pixel);
  r.get("train", "lambda_latent", t.weights.latent);
  r.get("train", "pixel_lambda", t.pixel_lambda);
  r.get("train", "pixel_mode", mode);
  r.get("train", "supervision", t.supervision);
  r.get("train", "checkpoint_every", t.checkpoint_every);

  auto& a = c.augment;
  r.get("augment", "enabled", a.enabled);
  r.get("augment", "crop_h", a.crop_h);
  r.get("augment", "crop_w", a.crop_w);
  r.get("augment", "brightness", a.brightness);
  r.get("augment", "contrast", a.contrast);
  r.get("augment", "saturation", a.saturation);
  r.get("augment", "hue", a.hue);
  r.get("augment", "scale_min", a.scale_min);
  r.get("augment", "scale_max", a.scale_max);
  r.get("augment", "flip_prob", a.flip_prob);
  r.get("augment", "rotation_deg", a.rotation_deg);

  r.get("eval", "cap", c.eval.cap);
  r.get("eval", "silog_x100", c.eval.silog_x100);
  r.get("eval", "irmse", c.eval.irmse);

  r.reject_unknown();
  try {
    d.sparse_pattern = parse_sparse_pattern(pattern);
    t.pixel_mode = parse_pixel_loss_mode(mode);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  t.diffusion_target = parse_diffusion_target(target);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  try {
    scene.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  require(scene.height % 32 == 0 && scene.width % 32 == 0, "scene dims must be multiples of 32");
  require(data.sparse_density > 0.0 && data.sparse_density <= 1.0, "sparse_density must lie in (0, 1]");
  require(data.n_train >= 0 && data.n_val >= 0, "sample counts must be non-negative");
  const auto& sc = model.schedule;
  require(sc.train_steps >= 1, "schedule.train_steps must be positive");
  require(sc.beta_start > 0.0 && sc.beta_start <= sc.beta_end && sc.beta_end < 1.0,
          "schedule betas must satisfy 0 < beta_start <= beta_end < 1");
  require(sc.infer_steps >= 1 && sc.infer_steps <= sc.train_steps, "need 1 <= infer_steps <= train_steps");
  require(model.latent_dim > 0 && model.condition_dim > 0, "latent and condition dims must be positive");
  require(model.denoiser_width > 0 && model.decoder_hidden > 0, "network widths must be positive");
  require(model.time_dim > 0 && model.time_dim % 2 == 0, "time_dim must be positive and even");
  require(model.attention_window >= 0, "attention_window must be >= 0");
  for (auto ch : model.backbone_channels) require(ch > 0, "backbone channels must be positive");
  require(model.max_depth > 1.0, "max_depth must exceed 1");
  require(model.decoder_init_depth > 0.0 && model.decoder_init_depth < model.max_depth - 1.0,
          "decoder_init_depth outside output range");
  require(model.image_std > 0.0, "image_std must be positive");
  require(train.steps > 0 || train.epochs > 0, "train needs steps or epochs");
  require(train.batch_size >= 1, "batch_size must be positive");
  require(train.base_lr > train.final_lr && train.final_lr > 0.0, "need base_lr > final_lr > 0");
  require(train.warmup_fraction > 0.0 && train.warmup_fraction < 1.0, "warmup_fraction must lie in (0, 1)");
  require(train.aux_fraction >= 0.0 && train.aux_fraction <= 1.0, "aux_fraction must lie in [0, 1]");
  require(train.head_lr_multiplier > 0.0, "head_lr_multiplier must be positive");
  require(train.beta1 >= 0.0 && train.beta1 < 1.0 && train.beta2 >= 0.0 && train.beta2 < 1.0,
          "optimizer betas must lie in [0, 1)");
  require(train.weight_decay >= 0.0 && train.grad_clip >= 0.0, "weight_decay and grad_clip must be >= 0");
  require(train.rollout_grad_steps >= 0, "rollout_grad_steps must be >= 0");
  require(train.supervision == "dense" || train.supervision == "sparse",
          "supervision must be dense or sparse");
  require(train.checkpoint_every >= 0, "checkpoint_every must be >= 0");
  const auto& a = augment;
  require(a.scale_min >= 1.0 && a.scale_min <= a.scale_max, "augment scale range must satisfy 1 <= min <= max");
  require(a.crop_h >= 0 && a.crop_w >= 0, "crop dims must be >= 0");
  require(a.crop_h <= scene.height && a.crop_w <= scene.width, "crop exceeds image dims");
  require(a.crop_h == 0 || a.crop_h % 32 == 0, "crop_h must be a multiple of 32");
  require(a.crop_w == 0 || a.crop_w % 32 == 0, "crop_w must be a multiple of 32");
  require(a.flip_prob >= 0.0 && a.flip_prob <= 1.0, "flip_prob must lie in [0, 1]");
  require(a.brightness >= 0.0 && a.contrast >= 0.0 && a.saturation >= 0.0 && a.hue >= 0.0 &&
              a.rotation_deg >= 0.0,
          "jitter ranges must be >= 0");
  require(eval.cap > 0.0, "eval cap must be positive");
}

}  // namespace diffdepth
