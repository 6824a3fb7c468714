// Copyright 2026 The oodr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OODR_ERRORS_H_
#define OODR_ERRORS_H_

#include <stdexcept>
#include <string>

namespace oodr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// invalid configuration values (bad layer sizes, unknown config keys, ...)
class ConfigError : public Error {
 public:
  using Error::Error;
};

// tensor or vector dimensions that do not line up
class ShapeError : public Error {
 public:
  using Error::Error;
};

// invalid user input: non-finite actions, empty batches, short trajectories
class InputError : public Error {
 public:
  using Error::Error;
};

// loss became non-finite during optimization
class TrainingError : public Error {
 public:
  using Error::Error;
};

// non-finite model output at inference time
class NumericError : public Error {
 public:
  using Error::Error;
};

// malformed files or missing record fields
class FormatError : public Error {
 public:
  using Error::Error;
};

// scripted data collection failed too often
class CollectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace oodr

#endif  // OODR_ERRORS_H_
