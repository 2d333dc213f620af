// Copyright 2026 The seglab Authors. All Rights Reserved.
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

#pragma once

#include <stdexcept>
#include <string>

namespace seglab {

/// Base class of every domain error raised by the library. The CLI maps it
/// to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnknownColor : public Error {
 public:
  UnknownColor(int r, int g, int b, int y, int x)
      : Error("unknown mask color (" + std::to_string(r) + "," + std::to_string(g) + "," +
              std::to_string(b) + ") at row " + std::to_string(y) + ", col " +
              std::to_string(x)),
        r(r), g(g), b(b), y(y), x(x) {}
  int r, g, b, y, x;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class TrainingAborted : public Error {
 public:
  using Error::Error;
};

class IncompatibleCheckpoint : public Error {
 public:
  using Error::Error;
};

}  // namespace seglab
