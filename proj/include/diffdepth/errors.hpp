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

#include <stdexcept>
#include <string>

namespace diffdepth {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violation: bad shape, out-of-range argument.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Configuration is missing, malformed, or inconsistent with a checkpoint.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written, or its contents are malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A loss or intermediate tensor became NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace diffdepth

#define DIFFDEPTH_REQUIRE(cond, msg)                                  \
  do {                                                                \
    if (!(cond)) throw ::diffdepth::InvalidArgument(std::string(msg)); \
  } while (0)
