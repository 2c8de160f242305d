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

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "napo/checkpoint.h"
#include "napo/errors.h"
#include "test_support.h"

namespace napo {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("napo_ckpt_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.meta["kind"] = "test";
  c.meta["beta"] = "0.5";
  Tensor a = Tensor::zeros({2, 3});
  testing::Gen gen(11);
  for (double& v : a.values) v = gen.normal();
  Tensor b = Tensor::zeros({4});
  b[0] = std::numeric_limits<double>::denorm_min();
  b[1] = -0.0;
  b[2] = std::numeric_limits<double>::max();
  b[3] = 1.0 / 3.0;
  c.tensors = {{"a", a}, {"b", b}};
  return c;
}

TEST(Checkpoint, RoundTripsBitExactly) {
  const fs::path dir = temp_dir("roundtrip");
  const Checkpoint c = sample_checkpoint();
  save_checkpoint(c, dir / "x.ckpt");
  const Checkpoint back = load_checkpoint(dir / "x.ckpt");
  EXPECT_EQ(back.meta, c.meta);
  ASSERT_EQ(back.tensors.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.tensors[i].first, c.tensors[i].first);
    EXPECT_EQ(back.tensors[i].second.shape, c.tensors[i].second.shape);
    EXPECT_EQ(0, std::memcmp(back.tensors[i].second.values.data(),
                             c.tensors[i].second.values.data(),
                             c.tensors[i].second.size() * sizeof(double)));
  }
  save_checkpoint(back, dir / "y.ckpt");
  EXPECT_EQ(read_bytes(dir / "x.ckpt"), read_bytes(dir / "y.ckpt"));
}

TEST(Checkpoint, StartsWithMagicAndLeavesNoTempFile) {
  const fs::path dir = temp_dir("magic");
  save_checkpoint(sample_checkpoint(), dir / "x.ckpt");
  EXPECT_EQ(read_bytes(dir / "x.ckpt").substr(0, 8), "NAPOCKPT");
  size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    (void)entry;
    ++files;
  }
  EXPECT_EQ(files, 1u);
}

TEST(Checkpoint, RejectsCorruptFiles) {
  const fs::path dir = temp_dir("corrupt");
  save_checkpoint(sample_checkpoint(), dir / "x.ckpt");
  const std::string bytes = read_bytes(dir / "x.ckpt");
  {
    std::ofstream out(dir / "bad_magic.ckpt", std::ios::binary);
    out << "XXXXXXXX" << bytes.substr(8);
  }
  {
    std::ofstream out(dir / "short.ckpt", std::ios::binary);
    out << bytes.substr(0, bytes.size() - 3);
  }
  EXPECT_THROW(load_checkpoint(dir / "bad_magic.ckpt"), DataError);
  EXPECT_THROW(load_checkpoint(dir / "short.ckpt"), DataError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), DataError);
}

TEST(Checkpoint, LookupErrors) {
  const Checkpoint c = sample_checkpoint();
  EXPECT_EQ(c.tensor("b").size(), 4u);
  EXPECT_THROW(c.tensor("nope"), DataError);
  EXPECT_THROW(c.meta_value("nope"), DataError);
}

}  // namespace
}  // namespace napo
