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


#include <doctest.h>

#include <fstream>

#include "diffdepth/config.hpp"
#include "diffdepth/errors.hpp"
#include "test_util.hpp"

using namespace diffdepth;

TEST_CASE("defaults parse from an empty file") {
  auto c = ExperimentConfig::parse("");
  CHECK(c.model.latent_dim == 16);
  CHECK(c.model.condition_dim == 64);
  CHECK(c.model.schedule.train_steps == 1000);
  CHECK(c.model.schedule.infer_steps == 20);
  CHECK(c.train.base_lr == 1e-4);
  CHECK(c.train.diffusion_target == DiffusionTarget::kSelf);
  CHECK_FALSE(c.seed_set);
}

TEST_CASE("values override defaults") {
  auto c = testing::tiny_config();
  CHECK(c.scene.height == 32);
  CHECK(c.model.backbone_channels == std::array<int64_t, 4>{8, 8, 8, 8});
  CHECK(c.train.checkpoint_every == 3);
  CHECK(c.seed_set);
  auto gt = ExperimentConfig::parse("[train]\ndiffusion_target = gt\n");
  CHECK(gt.train.diffusion_target == DiffusionTarget::kGt);
}

TEST_CASE("malformed configs are rejected") {
  CHECK_THROWS_AS(ExperimentConfig::parse("[model]\nlatent_dim = sixteen\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[model]\nno_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[scene]\nheight = 30\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[schedule]\ninfer_steps = 0\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[schedule]\ntrain_steps = 10\ninfer_steps = 20\n"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[model]\nbackbone_channels = 8, 8\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("[train]\ndiffusion_target = both\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("model config survives json") {
  auto c = testing::tiny_config();
  auto back = ModelConfig::from_json(c.model.to_json());
  CHECK(back.to_json() == c.model.to_json());
  auto t = TrainConfig::from_json(c.train.to_json());
  CHECK(t.to_json() == c.train.to_json());
}

TEST_CASE("load keeps the source text") {
  auto dir = testing::temp_dir("config_load");
  const std::string text = "[experiment]\nseed = 12\n[train]\nsteps = 7\n";
  {
    std::ofstream f(dir / "c.ini");
    f << text;
  }
  auto c = ExperimentConfig::load(dir / "c.ini");
  CHECK(c.source_text == text);
  CHECK(c.seed == 12);
  CHECK(c.train.steps == 7);
}

TEST_CASE("shipped configs parse") {
  int n = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(DIFFDEPTH_SOURCE_DIR "/configs")) {
    if (e.path().extension() != ".ini") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(ExperimentConfig::load(e.path()));
    ++n;
  }
  CHECK(n >= 3);
}
