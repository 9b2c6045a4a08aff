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


#include <string>

#include <torch/serialize.h>
#include <torch/torch.h>

#include "diffdepth/errors.hpp"
#include "diffdepth/trainer.hpp"

namespace diffdepth {

namespace {

nlohmann::json meta_to_json(const CheckpointMeta& m) {
  return {{"model", m.model.to_json()},
          {"train", m.train.to_json()},
          {"config_text", m.config_text},
          {"iteration", m.iteration},
          {"total", m.total},
          {"seed", m.seed},
          {"arm", to_string(m.arm)},
          {"train_infer_steps", m.train_infer_steps}};
}

CheckpointMeta meta_from_json(const nlohmann::json& j, int64_t version) {
  CheckpointMeta m;
  m.version = version;
  m.model = ModelConfig::from_json(j.at("model"));
  m.train = TrainConfig::from_json(j.at("train"));
  m.config_text = j.at("config_text").get<std::string>();
  m.iteration = j.at("iteration").get<int64_t>();
  m.total = j.at("total").get<int64_t>();
  m.seed = j.at("seed").get<uint64_t>();
  m.arm = parse_diffusion_target(j.at("arm").get<std::string>());
  m.train_infer_steps = j.at("train_infer_steps").get<int64_t>();
  return m;
}

torch::serialize::InputArchive open_archive(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw IoError("checkpoint not found: " + path.string());
  }
  torch::serialize::InputArchive ar;
  try {
    ar.load_from(path.string());
  } catch (const c10::Error& e) {
    throw IoError("corrupt checkpoint " + path.string());
  }
  return ar;
}

CheckpointMeta read_meta(torch::serialize::InputArchive& ar, const std::filesystem::path& path) {
  c10::IValue version, meta;
  try {
    ar.read("format_version", version);
    ar.read("meta", meta);
  } catch (const c10::Error&) {
    throw IoError("checkpoint " + path.string() + " lacks metadata");
  }
  if (!version.isInt() || version.toInt() != kCheckpointFormatVersion) {
    throw ConfigError("checkpoint " + path.string() + " has format version " +
                      (version.isInt() ? std::to_string(version.toInt()) : std::string("?")) +
                      ", expected " + std::to_string(kCheckpointFormatVersion));
  }
  try {
    return meta_from_json(nlohmann::json::parse(meta.toStringRef()), version.toInt());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint " + path.string() + " has malformed metadata: " + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, DepthDiffusionModel& model,
                     torch::optim::AdamW* optimizer, const CheckpointMeta& meta,
                     const torch::Tensor& rng_state) {
  torch::serialize::OutputArchive ar;
  ar.write("format_version", c10::IValue(meta.version));
  ar.write("meta", c10::IValue(meta_to_json(meta).dump()));
  torch::serialize::OutputArchive model_ar;
  model->save(model_ar);
  ar.write("model", model_ar);
  if (optimizer != nullptr) {
    torch::serialize::OutputArchive opt_ar;
    optimizer->save(opt_ar);
    ar.write("optimizer", opt_ar);
  }
  if (rng_state.defined()) ar.write("rng_state", rng_state);

  auto tmp = path;
  tmp += ".tmp";
  try {
    ar.save_to(tmp.string());
  } catch (const c10::Error&) {
    throw IoError("cannot write checkpoint " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
  auto ar = open_archive(path);
  return read_meta(ar, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, DepthDiffusionModel& model,
                                 torch::optim::AdamW* optimizer,
                                 std::optional<DiffusionTarget> arm) {
  auto ar = open_archive(path);
  LoadedCheckpoint out;
  out.meta = read_meta(ar, path);

  const auto stored = out.meta.model.to_json();
  const auto current = model->config().to_json();
  if (stored != current) {
    std::string diff;
    for (const auto& [key, value] : current.items()) {
      if (!stored.contains(key) || stored.at(key) != value) {
        diff += " " + key + " (checkpoint " + (stored.contains(key) ? stored.at(key).dump() : "-") +
                ", model " + value.dump() + ")";
      }
    }
    throw ConfigError("checkpoint model config does not match:" + diff);
  }

  try {
    torch::serialize::InputArchive model_ar;
    ar.read("model", model_ar);
    model->load(model_ar);
    if (optimizer != nullptr) {
      torch::serialize::InputArchive opt_ar;
      if (ar.try_read("optimizer", opt_ar)) optimizer->load(opt_ar);
    }
    torch::Tensor state;
    if (ar.try_read("rng_state", state)) out.rng_state = state;
  } catch (const c10::Error&) {
    throw IoError("corrupt checkpoint " + path.string());
  }

  if (arm && *arm != out.meta.arm) {
    out.warnings.push_back("checkpoint " + path.filename().string() + " was trained with the " +
                           to_string(out.meta.arm) + " diffusion target; continuing as " +
                           to_string(*arm));
  }
  return out;
}

DepthDiffusionModel load_model(const std::filesystem::path& path, CheckpointMeta* meta) {
  const auto m = read_checkpoint_meta(path);
  DepthDiffusionModel model(m.model);
  load_checkpoint(path, model);
  if (meta != nullptr) *meta = m;
  return model;
}

}  // namespace diffdepth
