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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "napo/tensor.h"

namespace napo {

// On-disk layout:
//   bytes 0..7   magic "NAPOCKPT"
//   bytes 8..15  uint64 little-endian length N of the manifest
//   next N bytes JSON manifest:
//                {"format_version":1, "meta":{...},
//                 "tensors":[{"name","shape","offset","dtype":"f64le"}]}
//   remainder    all tensor values, row-major, IEEE-754 float64 little-endian,
//                concatenated in manifest order ("offset" counts elements).
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(std::string_view name) const;
  const std::string& meta_value(std::string_view key) const;
};

// Writes to a temporary sibling and renames over the target.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Writes text to a temporary sibling and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace napo
