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


"""Diffusion-based monocular depth estimation with self-diffusion training."""

from diffdepth._core import (
    ConfigError,
    InvalidArgument,
    IoError,
    Model,
    NoiseSchedule,
    NumericError,
    compute_metrics,
    ddim_loss,
    generate_scene,
    latent_loss,
    parse_config,
    pixel_loss,
    run_cli,
    timestep_plan,
)

__all__ = [
    "ConfigError",
    "InvalidArgument",
    "IoError",
    "Model",
    "NoiseSchedule",
    "NumericError",
    "compute_metrics",
    "ddim_loss",
    "generate_scene",
    "latent_loss",
    "parse_config",
    "pixel_loss",
    "run_cli",
    "timestep_plan",
]
