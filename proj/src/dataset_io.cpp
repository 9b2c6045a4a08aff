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

#include <cmath>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "diffdepth/data.hpp"
#include "diffdepth/errors.hpp"

namespace fs = std::filesystem;

namespace diffdepth {

namespace {

void ensure_parent(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
}

void write_png(const fs::path& path, const cv::Mat& mat) {
  ensure_parent(path);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat, {cv::IMWRITE_PNG_COMPRESSION, 6});
  } catch (const cv::Exception& e) {
    throw IoError("failed to write " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("failed to write " + path.string());
}

cv::Mat read_png(const fs::path& path, int flags) {
  if (!fs::exists(path)) throw IoError("missing file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  char magic[8] = {};
  in.read(magic, 8);
  static const char kPngMagic[8] = {'\x89', 'P', 'N', 'G', '\r', '\n', '\x1a', '\n'};
  if (in.gcount() != 8 || !std::equal(magic, magic + 8, kPngMagic)) {
    throw IoError("bad PNG magic in " + path.string());
  }
  cv::Mat mat = cv::imread(path.string(), flags);
  if (mat.empty()) throw IoError("failed to decode " + path.string());
  return mat;
}

uint64_t seed_from_id(const std::string& id) {
  if (id.size() > 1 && id[0] == 's') {
    try {
      return std::stoull(id.substr(1));
    } catch (const std::exception&) {
    }
  }
  return 0;
}

}  // namespace

uint16_t encode_depth_value(double depth_m) {
  if (!std::isfinite(depth_m) || depth_m < 0.0) throw IoError("depth must be finite and non-negative");
  const double stored = std::nearbyint(depth_m * 256.0);
  if (stored > 65535.0) {
    throw IoError("depth " + std::to_string(depth_m) + " m overflows the 16-bit encoding");
  }
  if (depth_m > 0.0 && stored == 0.0) {
    throw IoError("depth " + std::to_string(depth_m) + " m underflows to invalid (below 1/512 m)");
  }
  return static_cast<uint16_t>(stored);
}

torch::Tensor clamp_to_png_range(const torch::Tensor& depth) {
  return depth.clamp(1.0 / 256.0, 65535.0 / 256.0);
}

double decode_depth_value(uint16_t stored) { return static_cast<double>(stored) / 256.0; }

void write_depth_png(const fs::path& path, const torch::Tensor& depth, const torch::Tensor& valid) {
  DIFFDEPTH_REQUIRE(depth.dim() == 2 && depth.sizes() == valid.sizes(),
                    "depth PNG needs [H,W] depth and mask");
  auto d = depth.detach().to(torch::kCPU, torch::kFloat64).contiguous();
  auto m = valid.to(torch::kCPU, torch::kBool).contiguous();
  const int rows = static_cast<int>(d.size(0)), cols = static_cast<int>(d.size(1));
  cv::Mat mat(rows, cols, CV_16UC1);
  const auto* dp = d.data_ptr<double>();
  const auto* mp = m.data_ptr<bool>();
  for (int r = 0; r < rows; ++r) {
    auto* row = mat.ptr<uint16_t>(r);
    for (int c = 0; c < cols; ++c) {
      const auto i = static_cast<size_t>(r) * static_cast<size_t>(cols) + static_cast<size_t>(c);
      row[c] = mp[i] ? encode_depth_value(dp[i]) : 0;
    }
  }
  write_png(path, mat);
}

torch::Tensor read_depth_png(const fs::path& path) {
  cv::Mat mat = read_png(path, cv::IMREAD_UNCHANGED);
  if (mat.type() != CV_16UC1) throw IoError(path.string() + " is not a 16-bit grayscale PNG");
  auto out = torch::empty({mat.rows, mat.cols}, torch::kFloat32);
  auto acc = out.accessor<float, 2>();
  for (int r = 0; r < mat.rows; ++r) {
    const auto* row = mat.ptr<uint16_t>(r);
    for (int c = 0; c < mat.cols; ++c) acc[r][c] = static_cast<float>(decode_depth_value(row[c]));
  }
  return out;
}

void write_rgb_png(const fs::path& path, const torch::Tensor& image) {
  DIFFDEPTH_REQUIRE(image.dim() == 3 && image.size(0) == 3, "RGB PNG needs a [3,H,W] image");
  auto bytes = (image.detach().to(torch::kCPU, torch::kFloat64).clamp(0.0, 1.0) * 255.0)
                   .round()
                   .to(torch::kUInt8)
                   .permute({1, 2, 0})
                   .contiguous();
  cv::Mat rgb(static_cast<int>(bytes.size(0)), static_cast<int>(bytes.size(1)), CV_8UC3,
              bytes.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  write_png(path, bgr);
}

torch::Tensor read_rgb_png(const fs::path& path) {
  cv::Mat bgr = read_png(path, cv::IMREAD_COLOR);
  if (bgr.type() != CV_8UC3) throw IoError(path.string() + " is not an 8-bit RGB PNG");
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).div(255.0).contiguous();
}

void write_colormap_png(const fs::path& path, const torch::Tensor& depth, const torch::Tensor& valid,
                        double d_min, double d_max) {
  DIFFDEPTH_REQUIRE(depth.dim() == 2 && depth.sizes() == valid.sizes(), "colormap needs [H,W]");
  DIFFDEPTH_REQUIRE(d_max > d_min, "colormap range is empty");
  auto near = (1.0 - (depth.detach().to(torch::kFloat64) - d_min) / (d_max - d_min)).clamp(0.0, 1.0);
  auto gray = (near * 255.0).round().to(torch::kUInt8).contiguous();
  cv::Mat g(static_cast<int>(gray.size(0)), static_cast<int>(gray.size(1)), CV_8UC1,
            gray.data_ptr<uint8_t>());
  cv::Mat color;
  cv::applyColorMap(g, color, cv::COLORMAP_VIRIDIS);
  auto m = valid.to(torch::kBool).contiguous();
  const auto* mp = m.data_ptr<bool>();
  for (int r = 0; r < color.rows; ++r) {
    for (int c = 0; c < color.cols; ++c) {
      if (!mp[static_cast<size_t>(r) * static_cast<size_t>(color.cols) + static_cast<size_t>(c)]) {
        color.at<cv::Vec3b>(r, c) = cv::Vec3b(0, 0, 0);
      }
    }
  }
  write_png(path, color);
}

void save_sample(const fs::path& split_dir, const Sample& sample) {
  DIFFDEPTH_REQUIRE(!sample.id.empty(), "sample id is empty");
  write_rgb_png(split_dir / "image" / (sample.id + ".png"), sample.image);
  write_depth_png(split_dir / "depth" / (sample.id + ".png"), sample.depth,
                  torch::ones_like(sample.depth, torch::kBool));
  write_depth_png(split_dir / "sparse" / (sample.id + ".png"), sample.sparse_depth, sample.sparse_mask);
}

Sample load_sample(const fs::path& split_dir, const std::string& id) {
  Sample s;
  s.id = id;
  s.seed = seed_from_id(id);
  s.image = read_rgb_png(split_dir / "image" / (id + ".png"));
  s.depth = read_depth_png(split_dir / "depth" / (id + ".png"));
  s.sparse_depth = read_depth_png(split_dir / "sparse" / (id + ".png"));
  s.sparse_mask = s.sparse_depth > 0;
  if (s.image.size(1) != s.depth.size(0) || s.image.size(2) != s.depth.size(1) ||
      s.depth.sizes() != s.sparse_depth.sizes()) {
    throw IoError("sample " + id + " has inconsistent image/depth dimensions");
  }
  return s;
}

void DatasetManifest::save() const {
  nlohmann::json j{{"version", version}, {"split", split}, {"ids", ids}, {"spec_hash", spec_hash}};
  const fs::path path = split_dir() / "manifest.json";
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

DatasetManifest DatasetManifest::load(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.version = j.at("version").get<int>();
    m.split = j.at("split").get<std::string>();
    m.ids = j.at("ids").get<std::vector<std::string>>();
    m.spec_hash = j.at("spec_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("manifest " + manifest_path.string() + " is missing fields: " + e.what());
  }
  if (m.version != kDatasetFormatVersion) {
    throw IoError("unsupported dataset format version " + std::to_string(m.version));
  }
  m.root = manifest_path.parent_path().parent_path();
  return m;
}

std::vector<Sample> load_split(const DatasetManifest& manifest) {
  std::vector<Sample> out;
  out.reserve(manifest.ids.size());
  for (const auto& id : manifest.ids) out.push_back(load_sample(manifest.split_dir(), id));
  return out;
}

}  // namespace diffdepth
