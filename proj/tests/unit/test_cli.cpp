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
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "diffdepth/cli.hpp"
#include "diffdepth/data.hpp"
#include "test_util.hpp"

using namespace diffdepth;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "diffdepth");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const char* kTinyIni = R"([experiment]
seed = 3
[scene]
height = 32
width = 32
[data]
n_train = 4
n_val = 2
[schedule]
train_steps = 50
infer_steps = 3
[model]
latent_dim = 4
condition_dim = 8
backbone_channels = 8, 8, 8, 8
denoiser_width = 8
time_dim = 8
decoder_hidden = 8
[train]
steps = 6
batch_size = 2
checkpoint_every = 3
)";

/// Shared fixture: tiny config, synthesized data and one trained checkpoint.
struct Workspace {
  fs::path root;
  fs::path config;
  fs::path data;
  fs::path run;

  Workspace() {
    root = testing::temp_dir("cli_workspace");
    config = root / "tiny.ini";
    std::ofstream(config) << kTinyIni;
    data = root / "data";
    run = root / "run";
    auto s = cli({"synth", "--config", config.string(), "--out", data.string()});
    REQUIRE_MESSAGE(s.code == 0, s.err);
    auto t = cli({"train", "--config", config.string(), "--data", data.string(), "--out",
                  run.string()});
    REQUIRE_MESSAGE(t.code == 0, t.err);
  }
};

Workspace& workspace() {
  static Workspace ws;
  return ws;
}

std::vector<double> loss_column(const fs::path& log) {
  std::vector<double> out;
  std::ifstream f(log);
  std::string line;
  while (std::getline(f, line)) {
    auto j = nlohmann::json::parse(line);
    if (j.contains("l_total")) out.push_back(j["l_total"].get<double>());
  }
  return out;
}

}  // namespace

TEST_CASE("synth writes both splits reproducibly") {
  auto dir = testing::temp_dir("cli_synth");
  auto a = cli({"synth", "--seed", "5", "--n-train", "8", "--n-val", "2", "--out",
                (dir / "a").string()});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  auto b = cli({"synth", "--seed", "5", "--n-train", "8", "--n-val", "2", "--out",
                (dir / "b").string()});
  REQUIRE(b.code == 0);
  auto train = DatasetManifest::load(dir / "a" / "train" / "manifest.json");
  CHECK(train.ids.size() == 8);
  CHECK(DatasetManifest::load(dir / "a" / "val" / "manifest.json").ids.size() == 2);
  for (const auto& id : train.ids) {
    for (const char* kind : {"image", "depth", "sparse"}) {
      auto rel = fs::path("train") / kind / (id + ".png");
      CHECK(slurp(dir / "a" / rel) == slurp(dir / "b" / rel));
    }
  }
}

TEST_CASE("synth argument errors map to exit codes") {
  auto dir = testing::temp_dir("cli_synth_errors");
  auto zero = cli({"synth", "--seed", "1", "--n-train", "0", "--out", (dir / "z").string()});
  CHECK(zero.code == kExitUsage);
  CHECK_FALSE(fs::exists(dir / "z"));

  std::ofstream(dir / "bad.ini") << "[model]\nlatent_dim = -3\n";
  auto bad = cli({"synth", "--config", (dir / "bad.ini").string(), "--out", (dir / "x").string()});
  CHECK(bad.code == kExitUsage);
  CHECK(cli({"synth", "--config", (dir / "nope.ini").string(), "--out", "x"}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
}

TEST_CASE("unseeded synth announces its seed") {
  auto dir = testing::temp_dir("cli_synth_seed");
  auto r = cli({"synth", "--n-train", "1", "--n-val", "1", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("seed: ", 0) == 0);
}

TEST_CASE("train writes a log and a final checkpoint") {
  auto& ws = workspace();
  CHECK(fs::exists(ws.run / "final.ckpt"));
  auto losses = loss_column(ws.run / "train.jsonl");
  CHECK(losses.size() == 6);
}

TEST_CASE("train resume matches an uninterrupted run") {
  auto& ws = workspace();
  auto part = ws.root / "part";
  auto first = cli({"train", "--config", ws.config.string(), "--data", ws.data.string(), "--out",
                    part.string(), "--stop-after", "3"});
  REQUIRE_MESSAGE(first.code == 0, first.err);
  REQUIRE(fs::exists(part / "last.ckpt"));
  auto second = cli({"train", "--config", ws.config.string(), "--data", ws.data.string(), "--out",
                     part.string(), "--resume", (part / "last.ckpt").string()});
  REQUIRE_MESSAGE(second.code == 0, second.err);
  CHECK(loss_column(part / "train.jsonl") == loss_column(ws.run / "train.jsonl"));
}

TEST_CASE("train on missing data is an i/o error") {
  auto& ws = workspace();
  auto r = cli({"train", "--config", ws.config.string(), "--data", (ws.root / "nodata").string(),
                "--out", (ws.root / "nodata_run").string()});
  CHECK(r.code == kExitIo);
}

TEST_CASE("gt arm is recorded in the log") {
  auto& ws = workspace();
  auto out = ws.root / "gt_run";
  auto r = cli({"train", "--config", ws.config.string(), "--data", ws.data.string(), "--out",
                out.string(), "--diffusion-target", "gt", "--stop-after", "1"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::ifstream f(out / "train.jsonl");
  std::string line;
  bool found = false;
  while (std::getline(f, line)) {
    auto j = nlohmann::json::parse(line);
    if (j.contains("arm")) found = j["arm"] == "gt";
  }
  CHECK(found);
}

TEST_CASE("infer is bitwise deterministic and traces every step") {
  auto& ws = workspace();
  auto ckpt = (ws.run / "final.ckpt").string();
  auto split = (ws.data / "val").string();
  auto id = DatasetManifest::load(ws.data / "val" / "manifest.json").ids.front();
  auto a = cli({"infer", "--checkpoint", ckpt, "--data", split, "--id", id, "--seed", "4", "--out",
                (ws.root / "inf_a").string()});
  auto b = cli({"infer", "--checkpoint", ckpt, "--data", split, "--id", id, "--seed", "4", "--out",
                (ws.root / "inf_b").string()});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  REQUIRE(b.code == 0);
  CHECK(slurp(ws.root / "inf_a" / "depth.png") == slurp(ws.root / "inf_b" / "depth.png"));
  CHECK(fs::exists(ws.root / "inf_a" / "depth_color.png"));
  CHECK(a.err.empty());

  auto t = cli({"infer", "--checkpoint", ckpt, "--image",
                (ws.data / "val" / "image" / (id + ".png")).string(), "--seed", "4", "--steps", "5",
                "--trace", "--out", (ws.root / "inf_t").string()});
  REQUIRE_MESSAGE(t.code == 0, t.err);
  CHECK(t.err.find("3") != std::string::npos);
  int traces = 0;
  for (const auto& e : fs::directory_iterator(ws.root / "inf_t")) {
    if (e.path().filename().string().rfind("trace_t", 0) == 0) ++traces;
  }
  CHECK(traces == 5);

  auto missing = cli({"infer", "--checkpoint", (ws.root / "none.ckpt").string(), "--image",
                      (ws.data / "val" / "image" / (id + ".png")).string(), "--out",
                      (ws.root / "inf_m").string()});
  CHECK(missing.code == kExitIo);
}

TEST_CASE("eval of ground truth against itself is perfect") {
  auto& ws = workspace();
  auto manifest = ws.data / "val" / "manifest.json";
  auto r = cli({"eval", "--manifest", manifest.string(), "--predictions",
                (ws.data / "val" / "depth").string(), "--out", (ws.root / "ev").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto j = nlohmann::json::parse(slurp(ws.root / "ev" / "eval.json"));
  CHECK(j["abs_rel"].get<double>() == 0.0);
  CHECK(j["rmse"].get<double>() == 0.0);
  CHECK(j["delta1"].get<double>() == 1.0);
  auto report = EvalReport::from_json(j);
  CHECK(r.out.find(report.table_line()) != std::string::npos);
}

TEST_CASE("eval results do not depend on the cap when it exceeds every depth") {
  auto& ws = workspace();
  auto manifest = (ws.data / "val" / "manifest.json").string();
  auto ckpt = (ws.run / "final.ckpt").string();
  auto a = cli({"eval", "--checkpoint", ckpt, "--manifest", manifest, "--seed", "2", "--cap", "1000"});
  auto b = cli({"eval", "--checkpoint", ckpt, "--manifest", manifest, "--seed", "2", "--cap", "5000"});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  REQUIRE(b.code == 0);
  auto ja = nlohmann::json::parse(a.out.substr(0, a.out.find('\n')));
  auto jb = nlohmann::json::parse(b.out.substr(0, b.out.find('\n')));
  ja.erase("cap");
  jb.erase("cap");
  CHECK(ja == jb);
}
