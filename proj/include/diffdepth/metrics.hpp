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
#include <optional>
#include <string>

#include <json.hpp>
#include <torch/types.h>

namespace diffdepth {

struct EvalReport {
  double silog = 0.0;  ///< sqrt of mean(e^2) - mean(e)^2, e = log pred - log gt
  double sq_rel = 0.0;
  double abs_rel = 0.0;
  double rmse = 0.0;  ///< meters
  double rmse_log = 0.0;
  double log10_err = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::optional<double> irmse;  ///< RMSE of inverse depth, when requested
  int64_t n_valid = 0;
  double cap = 0.0;

  nlohmann::json to_json(bool silog_x100 = false) const;
  static EvalReport from_json(const nlohmann::json& j);
  /// Abs Rel, Sq Rel, RMSE, RMSE log, d1, d2, d3 separated by " | ".
  std::string table_line() const;
  static std::string table_header();
};

/// Running sums over evaluated pixels; shards merge by addition.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(double cap, bool with_irmse = false) : cap_(cap), with_irmse_(with_irmse) {}

  /// Evaluated pixels are mask & (0 < gt <= cap). Shapes of all three must
  /// match. Throws InvalidArgument on a non-positive prediction there.
  void add(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& mask);
  void merge(const MetricAccumulator& other);
  int64_t count() const { return n_; }

  /// Throws InvalidArgument when no pixel was evaluated.
  EvalReport finalize() const;

 private:
  double cap_;
  bool with_irmse_;
  int64_t n_ = 0;
  double sum_e_ = 0.0, sum_e2_ = 0.0;
  double sum_sq_rel_ = 0.0, sum_abs_rel_ = 0.0, sum_sq_ = 0.0;
  double sum_log10_ = 0.0, sum_inv_sq_ = 0.0;
  int64_t d1_ = 0, d2_ = 0, d3_ = 0;
};

EvalReport compute_metrics(const torch::Tensor& pred, const torch::Tensor& gt,
                           const torch::Tensor& mask, double cap, bool with_irmse = false);

}  // namespace diffdepth
