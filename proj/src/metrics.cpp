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

#include "diffdepth/metrics.hpp"

#include <cmath>
#include <cstdio>

#include <torch/torch.h>

#include "diffdepth/errors.hpp"

namespace diffdepth {

void MetricAccumulator::add(const torch::Tensor& pred, const torch::Tensor& gt,
                            const torch::Tensor& mask) {
  if (pred.sizes() != gt.sizes() || pred.sizes() != mask.sizes()) {
    throw InvalidArgument("metrics: pred, gt and mask shapes differ");
  }
  auto p = pred.detach().to(torch::kCPU, torch::kFloat64).contiguous();
  auto g = gt.detach().to(torch::kCPU, torch::kFloat64).contiguous();
  auto m = mask.to(torch::kCPU, torch::kBool).contiguous();
  const auto* pp = p.data_ptr<double>();
  const auto* gp = g.data_ptr<double>();
  const auto* mp = m.data_ptr<bool>();
  const double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  for (int64_t i = 0; i < p.numel(); ++i) {
    const double z = gp[i];
    if (!mp[i] || !(z > 0.0 && z <= cap_)) continue;
    const double x = pp[i];
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw InvalidArgument("metrics: non-positive prediction at an evaluated pixel");
    }
    const double e = std::log(x) - std::log(z);
    const double diff = x - z;
    ++n_;
    sum_e_ += e;
    sum_e2_ += e * e;
    sum_sq_rel_ += diff * diff / z;
    sum_abs_rel_ += std::abs(diff) / z;
    sum_sq_ += diff * diff;
    sum_log10_ += std::abs(std::log10(x) - std::log10(z));
    const double inv = 1.0 / x - 1.0 / z;
    sum_inv_sq_ += inv * inv;
    const double ratio = std::max(x / z, z / x);
    d1_ += ratio < t1;
    d2_ += ratio < t2;
    d3_ += ratio < t3;
  }
}

void MetricAccumulator::merge(const MetricAccumulator& o) {
  DIFFDEPTH_REQUIRE(o.cap_ == cap_, "cannot merge metric shards with different caps");
  n_ += o.n_;
  sum_e_ += o.sum_e_;
  sum_e2_ += o.sum_e2_;
  sum_sq_rel_ += o.sum_sq_rel_;
  sum_abs_rel_ += o.sum_abs_rel_;
  sum_sq_ += o.sum_sq_;
  sum_log10_ += o.sum_log10_;
  sum_inv_sq_ += o.sum_inv_sq_;
  d1_ += o.d1_;
  d2_ += o.d2_;
  d3_ += o.d3_;
}

EvalReport MetricAccumulator::finalize() const {
  if (n_ == 0) throw InvalidArgument("metrics: evaluation set is empty");
  const double n = static_cast<double>(n_);
  EvalReport r;
  r.n_valid = n_;
  r.cap = cap_;
  const double si = sum_e2_ / n - (sum_e_ * sum_e_) / (n * n);
  r.silog = std::sqrt(std::max(si, 0.0));
  r.sq_rel = sum_sq_rel_ / n;
  r.abs_rel = sum_abs_rel_ / n;
  r.rmse = std::sqrt(sum_sq_ / n);
  r.rmse_log = std::sqrt(sum_e2_ / n);
  r.log10_err = sum_log10_ / n;
  r.delta1 = static_cast<double>(d1_) / n;
  r.delta2 = static_cast<double>(d2_) / n;
  r.delta3 = static_cast<double>(d3_) / n;
  if (with_irmse_) r.irmse = std::sqrt(sum_inv_sq_ / n);
  return r;
}

EvalReport compute_metrics(const torch::Tensor& pred, const torch::Tensor& gt,
                           const torch::Tensor& mask, double cap, bool with_irmse) {
  MetricAccumulator acc(cap, with_irmse);
  acc.add(pred, gt, mask);
  return acc.finalize();
}

nlohmann::json EvalReport::to_json(bool silog_x100) const {
  nlohmann::json j{{"silog", silog_x100 ? 100.0 * silog : silog},
                   {"sq_rel", sq_rel},
                   {"abs_rel", abs_rel},
                   {"rmse", rmse},
                   {"rmse_log", rmse_log},
                   {"log10_err", log10_err},
                   {"delta1", delta1},
                   {"delta2", delta2},
                   {"delta3", delta3},
                   {"n_valid", n_valid},
                   {"cap", cap}};
  if (irmse) j["irmse"] = *irmse;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.silog = j.at("silog").get<double>();
  r.sq_rel = j.at("sq_rel").get<double>();
  r.abs_rel = j.at("abs_rel").get<double>();
  r.rmse = j.at("rmse").get<double>();
  r.rmse_log = j.at("rmse_log").get<double>();
  r.log10_err = j.at("log10_err").get<double>();
  r.delta1 = j.at("delta1").get<double>();
  r.delta2 = j.at("delta2").get<double>();
  r.delta3 = j.at("delta3").get<double>();
  r.n_valid = j.at("n_valid").get<int64_t>();
  r.cap = j.at("cap").get<double>();
  if (j.contains("irmse")) r.irmse = j.at("irmse").get<double>();
  return r;
}

std::string EvalReport::table_header() {
  return "abs_rel | sq_rel | rmse | rmse_log | d1 | d2 | d3";
}

std::string EvalReport::table_line() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.6f | %.6f | %.6f | %.6f | %.6f | %.6f | %.6f", abs_rel,
                sq_rel, rmse, rmse_log, delta1, delta2, delta3);
  return buf;
}

}  // namespace diffdepth
