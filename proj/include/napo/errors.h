// Copyright 2026 The NAPO Authors.
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

namespace napo {

// Bad flags, inconsistent configuration, or missing prerequisites.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& file, size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  size_t line() const { return line_; }

 private:
  size_t line_;
};

class ReferenceError : public DataError {
 public:
  explicit ReferenceError(const std::string& key)
      : DataError("unknown item id '" + key + "'"), key_(key) {}

  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Non-finite loss or gradient during training.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace napo
