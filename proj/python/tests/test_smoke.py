# Copyright 2026 The diffdepth Authors
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import math

import numpy as np
import pytest

import diffdepth


def test_schedule_matches_cumulative_product():
    sched = diffdepth.NoiseSchedule.linear(1000, 1e-4, 0.02)
    betas = np.linspace(1e-4, 0.02, 1000)
    expected = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    assert sched.steps == 1000
    assert np.max(np.abs(np.array(sched.alpha_bars) - expected)) < 1e-12
    assert sched.alpha_bar(0) == 1.0


def test_ddim_step_preserves_noise():
    rng = np.random.default_rng(0)
    sched = diffdepth.NoiseSchedule.linear()
    x0 = rng.standard_normal((1, 4, 3, 3))
    eps = rng.standard_normal((1, 4, 3, 3))
    xt = sched.q_sample(x0, 700, eps)
    stepped = sched.ddim_step(xt, x0, 700, 350)
    np.testing.assert_allclose(stepped, sched.q_sample(x0, 350, eps), atol=1e-12)
    np.testing.assert_array_equal(sched.ddim_step(xt, x0, 700, 0), x0)


def test_timestep_plan():
    assert diffdepth.timestep_plan(1000, 5) == [1000, 800, 600, 400, 200, 0]
    with pytest.raises(ValueError):
        diffdepth.timestep_plan(10, 20)


def test_losses_against_numpy():
    pred = np.array([1.0, 3.0, 100.0])
    gt = np.array([3.0, 5.0, 1.0])
    mask = np.array([True, True, False])
    assert diffdepth.pixel_loss(pred, gt, mask) == pytest.approx(math.sqrt(7.4), rel=1e-14)
    a = np.arange(12.0).reshape(1, 3, 2, 2)
    b = np.zeros_like(a)
    assert diffdepth.ddim_loss(a, b) == pytest.approx(np.mean(a**2))
    lm = np.array([[[[True, False], [False, False]]]])
    assert diffdepth.latent_loss(a, b, lm) == pytest.approx(0.0 + 16.0 + 64.0)
    with pytest.raises(ValueError):
        diffdepth.pixel_loss(pred, gt, np.zeros(3, dtype=bool))


def test_metrics_perfect_prediction():
    depth = np.linspace(1.0, 10.0, 20)
    report = diffdepth.compute_metrics(depth, depth, depth > 0)
    assert report["abs_rel"] == 0.0
    assert report["delta1"] == 1.0
    assert report["n_valid"] == 20


def test_generate_scene_is_seeded():
    a = diffdepth.generate_scene(32, 64, 5)
    b = diffdepth.generate_scene(32, 64, 5)
    assert a["image"].shape == (3, 32, 64)
    assert a["depth"].shape == (32, 64)
    np.testing.assert_array_equal(a["depth"], b["depth"])
    assert (a["depth"] > 0).any()


def test_parse_config():
    cfg = diffdepth.parse_config("[model]\nlatent_dim = 8\n")
    assert cfg["model"]["latent_dim"] == 8
    with pytest.raises(diffdepth.ConfigError):
        diffdepth.parse_config("[model]\nbogus = 1\n")


def test_cli_round_trip(tmp_path):
    ini = tmp_path / "tiny.ini"
    ini.write_text(
        "[experiment]\nseed = 1\n[scene]\nheight = 32\nwidth = 32\n"
        "[data]\nn_train = 2\nn_val = 1\n[schedule]\ntrain_steps = 20\ninfer_steps = 2\n"
        "[model]\nlatent_dim = 4\ncondition_dim = 8\nbackbone_channels = 8, 8, 8, 8\n"
        "denoiser_width = 8\ntime_dim = 8\ndecoder_hidden = 8\n"
        "[train]\nsteps = 2\nbatch_size = 2\n"
    )
    code, _, err = diffdepth.run_cli(["synth", "--config", str(ini), "--out", str(tmp_path / "data")])
    assert code == 0, err
    code, _, err = diffdepth.run_cli(
        ["train", "--config", str(ini), "--data", str(tmp_path / "data"), "--out", str(tmp_path / "run")]
    )
    assert code == 0, err
    model = diffdepth.Model.load(str(tmp_path / "run" / "final.ckpt"))
    assert model.config["latent_dim"] == 4
    image = diffdepth.generate_scene(32, 32, 9)["image"]
    d1 = model.infer(image, seed=3)
    d2 = model.infer(image, seed=3)
    assert d1.shape == (32, 32)
    np.testing.assert_array_equal(d1, d2)
    assert diffdepth.run_cli(["synth", "--n-train", "0", "--out", str(tmp_path / "x")])[0] == 2
