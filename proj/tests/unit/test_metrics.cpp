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

#include <cmath>

#include <torch/torch.h>

#include "diffdepth/errors.hpp"
#include "diffdepth/metrics.hpp"
#include "oracles.hpp"

using namespace diffdepth;

TEST_CASE("perfect prediction") {
  auto gt = torch::rand({8, 8}, torch::kFloat64) * 20 + 1;
  auto r = compute_metrics(gt, gt, torch::ones({8, 8}, torch::kBool), 80.0);
  CHECK(r.silog == 0.0);
  CHECK(r.abs_rel == 0.0);
  CHECK(r.sq_rel == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.rmse_log == 0.0);
  CHECK(r.log10_err == 0.0);
  CHECK(r.delta1 == 1.0);
  CHECK(r.delta3 == 1.0);
  CHECK(r.n_valid == 64);
}

TEST_CASE("threshold accuracy is strict") {
  CHECK(1.25 * 1.25 * 1.25 == 1.953125);
  auto one = torch::ones({1}, torch::kFloat64);
  auto m = torch::ones({1}, torch::kBool);
  auto r = compute_metrics(one * 2.0, one, m, 80.0);
  CHECK(r.delta1 == 0.0);
  CHECK(r.delta2 == 0.0);
  CHECK(r.delta3 == 0.0);
  r = compute_metrics(one * 1.25, one, m, 80.0);
  CHECK(r.delta1 == 0.0);
  CHECK(r.delta2 == 1.0);
  r = compute_metrics(one, one * 1.25, m, 80.0);
  CHECK(r.delta1 == 0.0);
}

TEST_CASE("single pixel values") {
  auto r = compute_metrics(torch::full({1}, 3.0), torch::full({1}, 2.0), torch::ones({1}, torch::kBool),
                           80.0, true);
  CHECK(r.abs_rel == doctest::Approx(0.5));
  CHECK(r.sq_rel == doctest::Approx(0.5));
  CHECK(r.rmse == doctest::Approx(1.0));
  CHECK(r.rmse_log == doctest::Approx(std::log(1.5)));
  CHECK(r.log10_err == doctest::Approx(std::log10(1.5)));
  CHECK(r.silog == doctest::Approx(0.0).epsilon(1e-12));
  REQUIRE(r.irmse.has_value());
  CHECK(*r.irmse == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("cap and mask define the evaluation set") {
  auto gt = torch::tensor({1.0, 5.0, 60.0, 90.0, 0.0}, torch::kFloat64);
  auto pred = torch::tensor({1.0, 6.0, 30.0, 1.0, -1.0}, torch::kFloat64);
  auto m = torch::tensor({true, true, true, true, true});
  CHECK(compute_metrics(pred, gt, m, 80.0).n_valid == 3);
  CHECK(compute_metrics(pred, gt, m, 50.0).n_valid == 2);
  m[1] = false;
  CHECK(compute_metrics(pred, gt, m, 50.0).n_valid == 1);
  CHECK_THROWS_AS(compute_metrics(pred, gt, torch::zeros_like(m), 80.0), InvalidArgument);
  auto neg = pred.clone();
  neg[0] = 0.0;
  CHECK_THROWS_AS(compute_metrics(neg, gt, m, 80.0), InvalidArgument);
}

TEST_CASE("metrics agree with loop oracle and merge exactly") {
  torch::manual_seed(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto gt = torch::rand({5, 7}, torch::kFloat64) * 90 + 0.1;
    auto pred = gt * (torch::rand({5, 7}, torch::kFloat64) + 0.5);
    auto mask = torch::rand({5, 7}) > 0.3;
    mask[0][0] = true;
    gt[0][0] = 1.0;
    auto r = compute_metrics(pred, gt, mask, 80.0, true);
    auto o = oracle::metrics(oracle::values(pred), oracle::values(gt), oracle::flags(mask), 80.0);
    CHECK(r.n_valid == o.n);
    CHECK(std::abs(r.silog - o.silog) < 1e-10);
    CHECK(std::abs(r.abs_rel - o.abs_rel) < 1e-10);
    CHECK(std::abs(r.sq_rel - o.sq_rel) < 1e-10);
    CHECK(std::abs(r.rmse - o.rmse) < 1e-10);
    CHECK(std::abs(r.rmse_log - o.rmse_log) < 1e-10);
    CHECK(std::abs(r.log10_err - o.log10_err) < 1e-10);
    CHECK(std::abs(r.delta1 - o.d1) < 1e-10);
    CHECK(std::abs(r.delta2 - o.d2) < 1e-10);
    CHECK(std::abs(r.delta3 - o.d3) < 1e-10);
    CHECK(std::abs(*r.irmse - o.irmse) < 1e-10);

    MetricAccumulator a(80.0), b(80.0);
    a.add(pred.narrow(0, 0, 2), gt.narrow(0, 0, 2), mask.narrow(0, 0, 2));
    b.add(pred.narrow(0, 2, 3), gt.narrow(0, 2, 3), mask.narrow(0, 2, 3));
    a.merge(b);
    auto merged = a.finalize();
    CHECK(merged.n_valid == r.n_valid);
    CHECK(std::abs(merged.rmse - r.rmse) < 1e-12);
    CHECK(std::abs(merged.silog - r.silog) < 1e-10);
  }
  MetricAccumulator x(80.0), y(50.0);
  CHECK_THROWS_AS(x.merge(y), InvalidArgument);
}

TEST_CASE("silog is scale invariant") {
  auto gt = torch::rand({6, 6}, torch::kFloat64) * 10 + 0.5;
  auto pred = torch::rand({6, 6}, torch::kFloat64) * 10 + 0.5;
  auto m = torch::ones({6, 6}, torch::kBool);
  const double base = compute_metrics(pred, gt, m, 1e9).silog;
  for (double k : {0.05, 2.0, 40.0}) {
    CHECK(std::abs(compute_metrics(pred * k, gt * k, m, 1e9).silog - base) < 1e-8);
  }
}

TEST_CASE("report serialization") {
  auto r = compute_metrics(torch::full({3}, 2.0), torch::tensor({1.0, 2.0, 3.0}),
                           torch::ones({3}, torch::kBool), 80.0, true);
  auto back = EvalReport::from_json(r.to_json());
  CHECK(back.rmse == r.rmse);
  CHECK(back.silog == r.silog);
  CHECK(back.irmse == r.irmse);
  CHECK(back.n_valid == 3);
  CHECK(r.to_json(true)["silog"].get<double>() == doctest::Approx(100.0 * r.silog));
  CHECK(r.table_line().find(" | ") != std::string::npos);
  CHECK(EvalReport::table_header() == "abs_rel | sq_rel | rmse | rmse_log | d1 | d2 | d3");
}
