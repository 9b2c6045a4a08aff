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
#include <random>

#include <torch/types.h>

#include "diffdepth/config.hpp"
#include "diffdepth/data.hpp"

namespace diffdepth {

/// One supervised example: image [3,H,W], depth [H,W] (0 where invalid),
/// mask [H,W] bool.
struct TrainSample {
  torch::Tensor image;
  torch::Tensor depth;
  torch::Tensor mask;
};

/// Dense or sparse supervision view of a stored sample.
TrainSample to_train_sample(const Sample& s, bool sparse);

/// Resizes by `s` (bilinear image, nearest depth/mask) and divides depth by s.
TrainSample rescale(const TrainSample& in, double s);
TrainSample crop(const TrainSample& in, int64_t top, int64_t left, int64_t h, int64_t w);
TrainSample hflip(const TrainSample& in);
/// Rotates about the image center. Pixels sampled from outside the frame
/// become invalid with depth 0.
TrainSample rotate(const TrainSample& in, double degrees);
/// Multiplicative brightness, contrast around the mean gray, saturation
/// around luma, hue rotation in YIQ (fraction of a turn). Clamped to [0,1].
torch::Tensor color_jitter(const torch::Tensor& image, double brightness, double contrast,
                           double saturation, double hue);

/// Random augmentation. Output has size (crop_h, crop_w), or the input size
/// when those are 0. A config with no jitter, unit scale, no flip and no
/// rotation returns the input unchanged.
TrainSample augment(const TrainSample& in, const AugmentationConfig& cfg, std::mt19937_64& rng);

}  // namespace diffdepth
