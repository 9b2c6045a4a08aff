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

#include "diffdepth/losses.hpp"

#include <cmath>

#include <torch/torch.h>

#include "diffdepth/errors.hpp"

namespace diffdepth {

namespace {

// sqrt that is exactly 0 with a zero (not NaN) gradient at v <= 0.
torch::Tensor safe_sqrt(const torch::Tensor& v) {
  auto positive = v > 0;
  auto guarded = torch::where(positive, v, torch::ones_like(v));
  return torch::where(positive, torch::sqrt(guarded), torch::zeros_like(v));
}

torch::Tensor broadcast_mask(const torch::Tensor& mask, const torch::Tensor& like) {
  DIFFDEPTH_REQUIRE(mask.scalar_type() == torch::kBool, "mask must be a bool tensor");
  if (mask.dim() == like.dim() - 1) return mask.unsqueeze(1);
  return mask;
}

double finite_value(const torch::Tensor& t, const char* name) {
  const double v = t.item<double>();
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss component: ") + name);
  return v;
}

}  // namespace

PixelLossMode parse_pixel_loss_mode(const std::string& name) {
  if (name == "as-printed") return PixelLossMode::kAsPrinted;
  if (name == "scale-invariant-log") return PixelLossMode::kScaleInvariantLog;
  throw InvalidArgument("unknown pixel loss mode: " + name);
}

std::string to_string(PixelLossMode mode) {
  return mode == PixelLossMode::kAsPrinted ? "as-printed" : "scale-invariant-log";
}

torch::Tensor ddim_loss(const torch::Tensor& target, const torch::Tensor& pred) {
  if (target.sizes() != pred.sizes()) throw InvalidArgument("ddim_loss: shape mismatch");
  return (target - pred).square().mean();
}

torch::Tensor pixel_loss(const torch::Tensor& pred, const torch::Tensor& gt,
                         const torch::Tensor& mask, double lambda, PixelLossMode mode) {
  if (pred.sizes() != gt.sizes() || pred.sizes() != mask.sizes()) {
    throw InvalidArgument("pixel_loss: pred, gt and mask shapes differ");
  }
  DIFFDEPTH_REQUIRE(mask.scalar_type() == torch::kBool, "mask must be a bool tensor");
  const int64_t count = mask.sum().item<int64_t>();
  if (count == 0) throw InvalidArgument("pixel_loss: mask has no valid pixels");
  auto p = pred.masked_select(mask);
  auto g = gt.masked_select(mask);
  const double n = static_cast<double>(count);
  if (mode == PixelLossMode::kAsPrinted) {
    auto delta = g - p;
    return safe_sqrt(delta.square().sum() / n + lambda / (n * n) * delta.sum().square());
  }
  if (!(torch::all(p > 0).item<bool>() && torch::all(g > 0).item<bool>())) {
    throw InvalidArgument("pixel_loss: log mode needs positive depth at valid pixels");
  }
  auto e = torch::log(p) - torch::log(g);
  return safe_sqrt(e.square().sum() / n - lambda / (n * n) * e.sum().square());
}

torch::Tensor latent_loss(const torch::Tensor& x0, const torch::Tensor& gt_latent,
                          const torch::Tensor& latent_mask) {
  if (x0.sizes() != gt_latent.sizes()) throw InvalidArgument("latent_loss: shape mismatch");
  auto m = broadcast_mask(latent_mask, x0);
  DIFFDEPTH_REQUIRE(m.dim() == 4 && m.size(1) == 1 && m.size(0) == x0.size(0) &&
                        m.size(2) == x0.size(2) && m.size(3) == x0.size(3),
                    "latent_loss: mask must be [B,1,h,w] matching the latent grid");
  const int64_t cells = m.sum().item<int64_t>();
  if (cells == 0) throw InvalidArgument("latent_loss: latent mask has no valid cells");
  auto per_cell = (x0 - gt_latent).square().sum(1, /*keepdim=*/true);
  return per_cell.masked_select(m).sum() / static_cast<double>(cells);
}

torch::Tensor aux_depth_loss(const torch::Tensor& pred, const torch::Tensor& gt,
                             const torch::Tensor& mask) {
  if (pred.sizes() != gt.sizes() || pred.sizes() != mask.sizes()) {
    throw InvalidArgument("aux loss: pred, gt and mask shapes differ");
  }
  const int64_t count = mask.sum().item<int64_t>();
  if (count == 0) throw InvalidArgument("aux loss: mask has no valid pixels");
  auto delta = pred.masked_select(mask) - gt.masked_select(mask);
  return delta.abs().mean() + delta.square().mean();
}

WeightedLoss total_loss(const LossTerms& parts, const LossWeights& weights, bool aux_active,
                        const torch::Tensor& pred, const torch::Tensor& gt,
                        const torch::Tensor& mask) {
  WeightedLoss out;
  auto& b = out.breakdown;
  b.weights = weights;
  b.l_ddim = finite_value(parts.ddim, "ddim");
  b.l_pixel = finite_value(parts.pixel, "pixel");
  b.l_latent = finite_value(parts.latent, "latent");
  b.valid_count = mask.sum().item<int64_t>();
  out.total = weights.ddim * parts.ddim + weights.pixel * parts.pixel + weights.latent * parts.latent;
  if (aux_active) {
    auto aux = aux_depth_loss(pred, gt, mask);
    b.l_aux = finite_value(aux, "aux");
    out.total = out.total + aux;
  }
  b.l_total = weights.ddim * b.l_ddim + weights.pixel * b.l_pixel + weights.latent * b.l_latent +
              b.l_aux;
  return out;
}

}  // namespace diffdepth
