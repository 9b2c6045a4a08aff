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

#include "diffdepth/denoiser.hpp"
#include "diffdepth/errors.hpp"
#include "test_util.hpp"

using namespace diffdepth;

namespace {

DenoiserOptions small_options() {
  DenoiserOptions o;
  o.latent_dim = 3;
  o.condition_dim = 5;
  o.width = 8;
  o.time_dim = 6;
  o.train_steps = 100;
  o.norm_groups = 4;
  return o;
}

}  // namespace

TEST_CASE("time embedding hand values") {
  auto e = time_embedding(1, 4);
  REQUIRE(e.sizes() == torch::IntArrayRef({4}));
  CHECK((e.scalar_type() == torch::kFloat64));
  const double expected[] = {0.841470984808, 0.540302305868, 0.00999983333417, 0.999950000417};
  for (int i = 0; i < 4; ++i) CHECK(e[i].item<double>() == doctest::Approx(expected[i]).epsilon(1e-11));
  CHECK_THROWS_AS(time_embedding(1, 5), InvalidArgument);

  auto batched = time_embedding(torch::tensor({0, 1, 999}, torch::kLong), 8);
  CHECK(torch::allclose(batched[1], time_embedding(1, 8), 0.0, 1e-15));
  CHECK(torch::allclose(batched[2], time_embedding(999, 8), 0.0, 1e-15));
}

TEST_CASE("denoiser output shape and zero-initialized refinement") {
  torch::manual_seed(0);
  Denoiser net(small_options());
  auto xt = torch::randn({2, 3, 4, 6});
  auto cond = torch::randn({2, 5, 2, 3});
  DenoiserTrace trace;
  auto out = net->forward_projected(xt, torch::tensor({5, 100}), net->project_condition(cond), &trace);
  CHECK(out.sizes() == xt.sizes());
  CHECK(torch::equal(out, trace.fused));
  CHECK(trace.attention.sizes() == torch::IntArrayRef({2, 24, 24}));
  CHECK(torch::allclose(trace.attention.sum(-1), torch::ones({2, 24})));
  CHECK(torch::equal(net->predict_x0(xt, torch::tensor({5, 100}), cond), out));

  {
    torch::NoGradGuard g;
    net->refine_scale().fill_(0.5);
  }
  CHECK_FALSE(torch::equal(net->predict_x0(xt, torch::tensor({5, 100}), cond), out));
}

TEST_CASE("denoiser depends on t and the condition") {
  torch::manual_seed(1);
  Denoiser net(small_options());
  auto xt = torch::randn({1, 3, 4, 4});
  auto cond = torch::randn({1, 5, 2, 2});
  auto a = net->predict_x0(xt, 10, cond);
  CHECK_FALSE(torch::equal(a, net->predict_x0(xt, 90, cond)));
  CHECK_FALSE(torch::equal(a, net->predict_x0(xt, 10, cond + 1.0)));
}

TEST_CASE("denoiser input validation") {
  Denoiser net(small_options());
  auto xt = torch::randn({1, 3, 4, 4});
  CHECK_THROWS_AS(net->predict_x0(xt, 0, torch::randn({1, 5, 2, 2})), InvalidArgument);
  CHECK_THROWS_AS(net->predict_x0(xt, 101, torch::randn({1, 5, 2, 2})), InvalidArgument);
  CHECK_THROWS_AS(net->predict_x0(xt, 5, torch::randn({1, 5, 4, 4})), InvalidArgument);
  CHECK_THROWS_AS(net->predict_x0(xt, 5, torch::randn({1, 4, 2, 2})), InvalidArgument);
}

TEST_CASE("windowed attention partitions the grid") {
  torch::manual_seed(2);
  auto o = small_options();
  o.attention_window = 2;
  Denoiser net(o);
  auto xt = torch::randn({1, 3, 4, 4});
  auto cond = torch::randn({1, 5, 2, 2});
  DenoiserTrace trace;
  auto proj = net->project_condition(cond);
  auto out = net->forward_projected(xt, torch::tensor({7}), proj, &trace);
  CHECK(trace.attention.sizes() == torch::IntArrayRef({4, 4, 4}));
  CHECK(torch::allclose(trace.attention.sum(-1), torch::ones({4, 4})));
  CHECK(out.sizes() == xt.sizes());
  o.attention_window = 4;
  Denoiser wide(o);
  CHECK_THROWS_AS(wide->predict_x0(torch::randn({1, 3, 6, 6}), 3, torch::randn({1, 5, 3, 3})),
                  InvalidArgument);
}

TEST_CASE("predict_x0 gradient matches finite differences") {
  torch::manual_seed(3);
  auto o = small_options();
  o.latent_dim = 2;
  o.condition_dim = 3;
  Denoiser net(o);
  net->to(torch::kFloat64);
  {
    torch::NoGradGuard g;
    net->refine_scale().fill_(0.7);
  }
  auto cond = torch::randn({1, 3, 2, 2}, torch::kFloat64);
  auto w = torch::randn({1, 2, 4, 4}, torch::kFloat64);
  auto f_x = [&](const torch::Tensor& xt) { return (net->predict_x0(xt, 37, cond) * w).sum(); };
  CHECK(testing::gradient_error(f_x, torch::randn({1, 2, 4, 4}, torch::kFloat64)) < 1e-3);
  auto xt = torch::randn({1, 2, 4, 4}, torch::kFloat64);
  auto f_c = [&](const torch::Tensor& c) { return (net->predict_x0(xt, 37, c) * w).sum(); };
  CHECK(testing::gradient_error(f_c, cond) < 1e-3);
}
