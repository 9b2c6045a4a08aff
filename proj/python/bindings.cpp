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


// Python bindings. Arrays cross the boundary as float64/bool numpy arrays.

#include <cstring>
#include <optional>
#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <torch/torch.h>

#include "diffdepth/cli.hpp"
#include "diffdepth/config.hpp"
#include "diffdepth/data.hpp"
#include "diffdepth/errors.hpp"
#include "diffdepth/losses.hpp"
#include "diffdepth/metrics.hpp"
#include "diffdepth/sampler.hpp"
#include "diffdepth/schedule.hpp"
#include "diffdepth/trainer.hpp"

namespace py = pybind11;
using namespace diffdepth;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using BoolArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;

torch::Tensor to_tensor(const F64Array& a) {
  std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
  return torch::from_blob(const_cast<double*>(a.data()), shape, torch::kFloat64).clone();
}

torch::Tensor to_tensor(const BoolArray& a) {
  std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
  return torch::from_blob(const_cast<bool*>(a.data()), shape, torch::kBool).clone();
}

py::array to_numpy(const torch::Tensor& t) {
  if (t.scalar_type() == torch::kBool) {
    auto c = t.contiguous();
    py::array_t<bool> out(c.sizes().vec());
    std::memcpy(out.mutable_data(), c.data_ptr<bool>(), static_cast<size_t>(c.numel()));
    return out;
  }
  auto c = t.detach().to(torch::kFloat64).contiguous();
  py::array_t<double> out(c.sizes().vec());
  std::memcpy(out.mutable_data(), c.data_ptr<double>(), static_cast<size_t>(c.numel()) * sizeof(double));
  return out;
}

py::dict sample_dict(const Sample& s) {
  py::dict d;
  d["id"] = s.id;
  d["image"] = to_numpy(s.image);
  d["depth"] = to_numpy(s.depth);
  if (s.sparse_depth.defined()) {
    d["sparse_depth"] = to_numpy(s.sparse_depth);
    d["sparse_mask"] = to_numpy(s.sparse_mask);
  }
  return d;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "diffdepth native core";
  torch::set_num_threads(1);

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def_static("linear", &make_linear_schedule, py::arg("steps") = 1000,
                  py::arg("beta_start") = 1e-4, py::arg("beta_end") = 0.02)
      .def_property_readonly("steps", &NoiseSchedule::steps)
      .def("beta", &NoiseSchedule::beta)
      .def("alpha_bar", &NoiseSchedule::alpha_bar)
      .def_property_readonly("alpha_bars", [](const NoiseSchedule& s) {
        return std::vector<double>(s.alpha_bars().begin(), s.alpha_bars().end());
      })
      .def(
          "q_sample",
          [](const NoiseSchedule& s, const F64Array& x0, int64_t t, const F64Array& eps) {
            return to_numpy(q_sample(to_tensor(x0), t, to_tensor(eps), s));
          },
          py::arg("x0"), py::arg("t"), py::arg("eps"))
      .def(
          "ddim_step",
          [](const NoiseSchedule& s, const F64Array& xt, const F64Array& x0, int64_t t, int64_t t_prev) {
            return to_numpy(ddim_step(to_tensor(xt), to_tensor(x0), t, t_prev, s));
          },
          py::arg("xt"), py::arg("x0_hat"), py::arg("t"), py::arg("t_prev"));

  m.def(
      "timestep_plan", [](int64_t train_steps, int64_t k) { return make_timestep_plan(train_steps, k).steps; },
      py::arg("train_steps"), py::arg("k"));

  m.def(
      "pixel_loss",
      [](const F64Array& pred, const F64Array& gt, const BoolArray& mask, double lam, const std::string& mode) {
        return pixel_loss(to_tensor(pred), to_tensor(gt), to_tensor(mask), lam, parse_pixel_loss_mode(mode))
            .item<double>();
      },
      py::arg("pred"), py::arg("gt"), py::arg("mask"), py::arg("lam") = 0.85,
      py::arg("mode") = "as-printed");
  m.def(
      "latent_loss",
      [](const F64Array& x0, const F64Array& target, const BoolArray& mask) {
        return latent_loss(to_tensor(x0), to_tensor(target), to_tensor(mask)).item<double>();
      },
      py::arg("x0"), py::arg("target"), py::arg("latent_mask"));
  m.def(
      "ddim_loss",
      [](const F64Array& target, const F64Array& pred) {
        return ddim_loss(to_tensor(target), to_tensor(pred)).item<double>();
      },
      py::arg("target"), py::arg("pred"));
  m.def(
      "compute_metrics",
      [](const F64Array& pred, const F64Array& gt, const BoolArray& mask, double cap, bool irmse) {
        return json_to_py(compute_metrics(to_tensor(pred), to_tensor(gt), to_tensor(mask), cap, irmse).to_json());
      },
      py::arg("pred"), py::arg("gt"), py::arg("mask"), py::arg("cap") = 80.0, py::arg("irmse") = false);

  m.def(
      "generate_scene",
      [](int64_t height, int64_t width, uint64_t seed) {
        SceneSpec spec;
        spec.height = height;
        spec.width = width;
        return sample_dict(generate_scene(spec, seed));
      },
      py::arg("height") = 64, py::arg("width") = 96, py::arg("seed") = 0);

  m.def(
      "parse_config",
      [](const std::string& text) {
        auto c = ExperimentConfig::parse(text);
        py::dict d;
        d["seed"] = c.seed;
        d["model"] = json_to_py(c.model.to_json());
        d["train"] = json_to_py(c.train.to_json());
        return d;
      },
      py::arg("text"));

  py::class_<DepthDiffusionModel>(m, "Model")
      .def_static(
          "load", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("checkpoint"))
      .def_property_readonly("config", [](DepthDiffusionModel& mdl) { return json_to_py(mdl->config().to_json()); })
      .def(
          "infer",
          [](DepthDiffusionModel& mdl, const F64Array& image, std::optional<int64_t> steps, uint64_t seed) {
            auto plan = steps ? make_timestep_plan(mdl->config().schedule.train_steps, *steps) : mdl->default_plan();
            py::gil_scoped_release release;
            auto r = infer(to_tensor(image).to(torch::kFloat32), mdl, plan, seed);
            py::gil_scoped_acquire acquire;
            return to_numpy(r.depth);
          },
          py::arg("image"), py::arg("steps") = py::none(), py::arg("seed") = 0);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "diffdepth");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
