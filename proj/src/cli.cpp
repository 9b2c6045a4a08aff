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


#include "diffdepth/cli.hpp"

#include <filesystem>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "diffdepth/data.hpp"
#include "diffdepth/errors.hpp"
#include "diffdepth/trainer.hpp"

namespace fs = std::filesystem;

namespace diffdepth {

namespace {

Sample with_sparse(Sample s, const DataConfig& data) {
  auto sp = sparsify(s.depth, data.sparse_density, data.sparse_pattern, s.seed);
  s.sparse_depth = sp.depth;
  s.sparse_mask = sp.mask;
  return s;
}

TimestepPlan plan_for(const CheckpointMeta& meta, std::optional<int64_t> steps, std::ostream& err) {
  const int64_t k = steps.value_or(meta.train_infer_steps);
  if (k != meta.train_infer_steps) {
    err << "warning: inferring with " << k << " steps; the checkpoint was trained with "
        << meta.train_infer_steps << "\n";
  }
  return make_timestep_plan(meta.model.schedule.train_steps, k);
}

}  // namespace

std::vector<fs::path> cmd_synth(const ExperimentConfig& cfg, const fs::path& out_root) {
  cfg.validate();
  if (cfg.data.n_train <= 0) throw InvalidArgument("n_train must be positive");
  if (out_root.empty()) throw InvalidArgument("an output root is required");

  std::vector<fs::path> manifests;
  auto write_split = [&](const std::string& split, int64_t n, uint64_t first_seed) {
    DatasetManifest m;
    m.root = out_root;
    m.split = split;
    m.spec_hash = cfg.scene.hash();
    for (int64_t i = 0; i < n; ++i) {
      auto s = with_sparse(generate_scene(cfg.scene, first_seed + static_cast<uint64_t>(i)), cfg.data);
      save_sample(m.split_dir(), s);
      m.ids.push_back(s.id);
    }
    m.save();
    manifests.push_back(m.split_dir() / "manifest.json");
  };
  write_split("train", cfg.data.n_train, cfg.seed);
  if (cfg.data.n_val > 0) write_split("val", cfg.data.n_val, cfg.seed + cfg.data.val_seed_offset);
  return manifests;
}

void cmd_train(const ExperimentConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (opts.out_dir.empty()) throw InvalidArgument("an output directory is required");
  if (opts.stop_after && *opts.stop_after <= 0) throw InvalidArgument("--stop-after must be positive");
  auto manifest = DatasetManifest::load(opts.data_root / "train" / "manifest.json");
  if (opts.resume && !fs::is_regular_file(*opts.resume)) {
    throw IoError("checkpoint not found: " + opts.resume->string());
  }
  const bool sparse = cfg.train.supervision == "sparse";
  std::vector<TrainSample> samples;
  for (const auto& s : load_split(manifest)) samples.push_back(to_train_sample(s, sparse));

  Trainer trainer(cfg, std::move(samples), opts.out_dir);
  if (opts.resume) trainer.resume(*opts.resume);
  trainer.run(opts.stop_after);
}

InferenceTrace cmd_infer(const InferOptions& opts, std::ostream& err) {
  if (opts.image.has_value() == opts.id.has_value()) {
    throw InvalidArgument("give exactly one of --image or --id");
  }
  if (opts.out_dir.empty()) throw InvalidArgument("an output directory is required");
  CheckpointMeta meta;
  auto model = load_model(opts.checkpoint, &meta);
  const auto plan = plan_for(meta, opts.steps, err);
  const auto image = opts.image ? read_rgb_png(*opts.image) : load_sample(opts.split_dir, *opts.id).image;

  auto result = infer(image, model, plan, opts.seed, opts.trace);
  fs::create_directories(opts.out_dir);
  auto depth = clamp_to_png_range(result.depth);
  auto valid = torch::ones_like(depth, torch::kBool);
  write_depth_png(opts.out_dir / "depth.png", depth, valid);
  write_colormap_png(opts.out_dir / "depth_color.png", depth, valid, depth.min().item<double>(),
                     depth.max().item<double>());
  if (opts.trace) export_trace(opts.out_dir, result);
  return result;
}

EvalReport cmd_eval(const EvalOptions& opts, std::ostream& err) {
  if (opts.checkpoint.has_value() == opts.predictions.has_value()) {
    throw InvalidArgument("give exactly one of --checkpoint or --predictions");
  }
  if (!(opts.cap > 0.0)) throw InvalidArgument("cap must be positive");
  const auto manifest = DatasetManifest::load(opts.manifest);
  const auto samples = load_split(manifest);
  if (opts.predictions) {
    MetricAccumulator acc(opts.cap, opts.irmse);
    for (const auto& s : samples) {
      auto pred = read_depth_png(*opts.predictions / (s.id + ".png"));
      if (opts.sparse) {
        acc.add(pred, s.sparse_depth, s.sparse_mask);
      } else {
        acc.add(pred, s.depth, s.depth > 0);
      }
    }
    return acc.finalize();
  }
  CheckpointMeta meta;
  auto model = load_model(*opts.checkpoint, &meta);
  const auto plan = plan_for(meta, opts.steps, err);
  return evaluate_model(model, samples, plan, opts.seed, opts.cap, opts.sparse, opts.irmse);
}

namespace {

struct Common {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool out_required) {
  app->add_option("--config", c.config, "experiment config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "random seed");
  auto* out = app->add_option("--out", c.out, "output directory");
  if (out_required) out->required();
}

ExperimentConfig load_config(const Common& c) {
  return c.config.empty() ? ExperimentConfig::parse("") : ExperimentConfig::load(c.config);
}

/// Applies --seed, or draws and announces one when neither flag nor config set it.
uint64_t resolve_seed(const Common& c, bool config_has_seed, uint64_t config_seed, std::ostream& out) {
  if (c.seed) return *c.seed;
  if (config_has_seed) return config_seed;
  std::random_device rd;
  const uint64_t seed = (static_cast<uint64_t>(rd()) << 32) | rd();
  out << "seed: " << seed << "\n";
  return seed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffusion-based monocular depth estimation", "diffdepth"};
  app.require_subcommand(1);

  Common synth_c, train_c, infer_c, eval_c;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, synth_c, true);
  std::optional<int64_t> n_train, n_val;
  synth->add_option("--n-train", n_train, "training samples (overrides config)");
  synth->add_option("--n-val", n_val, "validation samples (overrides config)");

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, train_c, true);
  TrainOptions topts;
  std::string data_root, resume, target;
  std::optional<int64_t> stop_after;
  train->add_option("--data", data_root, "dataset root")->required();
  train->add_option("--resume", resume, "checkpoint to continue from");
  train->add_option("--diffusion-target", target, "self or gt");
  train->add_option("--stop-after", stop_after, "stop after this many iterations");

  auto* inf = app.add_subcommand("infer", "predict depth for one image");
  add_common(inf, infer_c, true);
  InferOptions iopts;
  std::string ckpt, image, id, split_dir;
  std::optional<int64_t> steps;
  inf->add_option("--checkpoint", ckpt, "model checkpoint")->required();
  inf->add_option("--image", image, "RGB PNG input");
  inf->add_option("--id", id, "sample id inside --data");
  inf->add_option("--data", split_dir, "split directory holding --id");
  inf->add_option("--steps", steps, "denoising steps K");
  inf->add_flag("--trace", iopts.trace, "export per-step depth maps");

  auto* ev = app.add_subcommand("eval", "evaluate predictions against ground truth");
  add_common(ev, eval_c, false);
  EvalOptions eopts;
  std::string eckpt, manifest, preds;
  std::optional<double> cap;
  std::optional<int64_t> esteps;
  ev->add_option("--checkpoint", eckpt, "model checkpoint");
  ev->add_option("--manifest", manifest, "split manifest.json")->required();
  ev->add_option("--predictions", preds, "directory of {id}.png predictions");
  ev->add_option("--cap", cap, "maximum ground-truth depth in meters");
  ev->add_option("--steps", esteps, "denoising steps K");
  ev->add_flag("--sparse", eopts.sparse, "evaluate against the sparse depth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      auto cfg = load_config(synth_c);
      if (n_train) cfg.data.n_train = *n_train;
      if (n_val) cfg.data.n_val = *n_val;
      cfg.seed = resolve_seed(synth_c, cfg.seed_set, cfg.seed, out);
      for (const auto& m : cmd_synth(cfg, synth_c.out)) out << m.string() << "\n";
    } else if (train->parsed()) {
      auto cfg = load_config(train_c);
      if (!target.empty()) cfg.train.diffusion_target = parse_diffusion_target(target);
      cfg.seed = resolve_seed(train_c, cfg.seed_set, cfg.seed, out);
      topts.data_root = data_root;
      topts.out_dir = train_c.out;
      if (!resume.empty()) topts.resume = resume;
      topts.stop_after = stop_after;
      cmd_train(cfg, topts);
      out << (fs::path(train_c.out) / "final.ckpt").string() << "\n";
    } else if (inf->parsed()) {
      iopts.checkpoint = ckpt;
      if (!image.empty()) iopts.image = image;
      if (!id.empty()) iopts.id = id;
      iopts.split_dir = split_dir;
      iopts.out_dir = infer_c.out;
      iopts.steps = steps;
      iopts.seed = resolve_seed(infer_c, false, 0, out);
      cmd_infer(iopts, err);
      out << (fs::path(infer_c.out) / "depth.png").string() << "\n";
    } else if (ev->parsed()) {
      auto cfg = load_config(eval_c);
      if (!eckpt.empty()) eopts.checkpoint = eckpt;
      if (!preds.empty()) eopts.predictions = preds;
      eopts.manifest = manifest;
      eopts.cap = cap.value_or(cfg.eval.cap);
      eopts.steps = esteps;
      eopts.irmse = cfg.eval.irmse;
      eopts.silog_x100 = cfg.eval.silog_x100;
      if (eopts.checkpoint) eopts.seed = resolve_seed(eval_c, cfg.seed_set, cfg.seed, out);
      const auto report = cmd_eval(eopts, err);
      const auto j = report.to_json(eopts.silog_x100).dump();
      if (!eval_c.out.empty()) {
        fs::create_directories(eval_c.out);
        std::ofstream f(fs::path(eval_c.out) / "eval.json");
        if (!(f << j << "\n")) throw IoError("cannot write eval.json");
      }
      out << j << "\n" << EvalReport::table_header() << "\n" << report.table_line() << "\n";
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}

}  // namespace diffdepth
