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

#include "napo/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "napo/errors.h"

namespace napo {
namespace {

constexpr char kMagic[8] = {'N', 'A', 'P', 'O', 'C', 'K', 'P', 'T'};

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64(const char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

const Tensor& Checkpoint::tensor(std::string_view name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw DataError("checkpoint has no tensor '" + std::string(name) + "'");
}

const std::string& Checkpoint::meta_value(std::string_view key) const {
  auto it = meta.find(std::string(key));
  if (it == meta.end()) {
    throw DataError("checkpoint has no meta key '" + std::string(key) + "'");
  }
  return it->second;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["meta"] = ckpt.meta;
  manifest["tensors"] = nlohmann::json::array();
  size_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    manifest["tensors"].push_back(
        {{"name", name}, {"shape", t.shape}, {"offset", offset}, {"dtype", "f64le"}});
    offset += t.size();
  }
  const std::string header = manifest.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_u64(out, header.size());
  out += header;
  out.reserve(out.size() + offset * 8);
  for (const auto& [name, t] : ckpt.tensors) {
    for (double v : t.values) put_u64(out, std::bit_cast<uint64_t>(v));
  }
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw DataError(path.string() + ": not a checkpoint file");
  }
  const uint64_t header_len = get_u64(bytes.data() + 8);
  if (16 + header_len > bytes.size()) throw DataError(path.string() + ": truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad manifest: " + e.what());
  }
  const char* payload = bytes.data() + 16 + header_len;
  const size_t payload_elems = (bytes.size() - 16 - header_len) / 8;

  Checkpoint ckpt;
  ckpt.meta = manifest.at("meta").get<std::map<std::string, std::string>>();
  for (const auto& entry : manifest.at("tensors")) {
    Tensor t = Tensor::zeros(entry.at("shape").get<std::vector<size_t>>());
    const size_t offset = entry.at("offset").get<size_t>();
    if (offset + t.size() > payload_elems) {
      throw DataError(path.string() + ": tensor payload out of range");
    }
    for (size_t i = 0; i < t.size(); ++i) {
      t.values[i] = std::bit_cast<double>(get_u64(payload + 8 * (offset + i)));
    }
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  return ckpt;
}

}  // namespace napo
