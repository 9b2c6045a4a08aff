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

// Straight-line reference implementations used to cross-check the tensor
// code. They share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace diffdepth::oracle {

inline std::vector<double> values(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat64).contiguous();
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

inline std::vector<bool> flags(const torch::Tensor& t) {
  auto c = t.to(torch::kBool).contiguous();
  std::vector<bool> out(static_cast<size_t>(c.numel()));
  for (int64_t i = 0; i < c.numel(); ++i) out[static_cast<size_t>(i)] = c.data_ptr<bool>()[i];
  return out;
}

inline double ddim_loss(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

/// log_mode = false: sqrt(mean d^2 + lambda/T^2 (sum d)^2), d = gt - pred.
/// log_mode = true:  sqrt(mean e^2 - lambda/T^2 (sum e)^2), e = log pred - log gt.
inline double pixel_loss(const std::vector<double>& pred, const std::vector<double>& gt,
                         const std::vector<bool>& valid, double lambda, bool log_mode) {
  double n = 0.0, s1 = 0.0, s2 = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (!valid[i]) continue;
    const double d = log_mode ? std::log(pred[i] / gt[i]) : gt[i] - pred[i];
    n += 1.0;
    s1 += d;
    s2 += d * d;
  }
  const double sign = log_mode ? -1.0 : 1.0;
  return std::sqrt(std::max(0.0, s2 / n + sign * lambda * s1 * s1 / (n * n)));
}

/// x, g laid out [B,d,h,w]; mask laid out [B,h,w].
inline double latent_loss(const std::vector<double>& x, const std::vector<double>& g,
                          const std::vector<bool>& mask, int64_t B, int64_t d, int64_t h,
                          int64_t w) {
  double total = 0.0, cells = 0.0;
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t xx = 0; xx < w; ++xx) {
        if (!mask[static_cast<size_t>((b * h + y) * w + xx)]) continue;
        cells += 1.0;
        for (int64_t c = 0; c < d; ++c) {
          const auto i = static_cast<size_t>(((b * d + c) * h + y) * w + xx);
          total += (x[i] - g[i]) * (x[i] - g[i]);
        }
      }
    }
  }
  return total / cells;
}

struct Metrics {
  double silog, sq_rel, abs_rel, rmse, rmse_log, log10_err, d1, d2, d3, irmse;
  int64_t n;
};

inline Metrics metrics(const std::vector<double>& pred, const std::vector<double>& gt,
                       const std::vector<bool>& valid, double cap) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (valid[i] && gt[i] > 0.0 && gt[i] <= cap) idx.push_back(i);
  }
  const double n = static_cast<double>(idx.size());
  Metrics m{};
  m.n = static_cast<int64_t>(idx.size());
  double mean_e = 0.0;
  for (auto i : idx) mean_e += std::log(pred[i] / gt[i]) / n;
  double var = 0.0;
  for (auto i : idx) {
    const double p = pred[i], g = gt[i];
    const double e = std::log(p / g);
    var += (e - mean_e) * (e - mean_e) / n;
    m.sq_rel += (p - g) * (p - g) / g / n;
    m.abs_rel += std::abs(p - g) / g / n;
    m.rmse += (p - g) * (p - g) / n;
    m.rmse_log += e * e / n;
    m.log10_err += std::abs(std::log10(p / g)) / n;
    m.irmse += (1.0 / p - 1.0 / g) * (1.0 / p - 1.0 / g) / n;
    const double r = std::max(p / g, g / p);
    m.d1 += (r < 1.25) / n;
    m.d2 += (r < 1.5625) / n;
    m.d3 += (r < 1.953125) / n;
  }
  m.silog = std::sqrt(var);
  m.rmse = std::sqrt(m.rmse);
  m.rmse_log = std::sqrt(m.rmse_log);
  m.irmse = std::sqrt(m.irmse);
  return m;
}

}  // namespace diffdepth::oracle
