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
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../tools/cli.h"
#include "json.hpp"

namespace napo {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  CliRun r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("napo_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    const CliRun gen = run({"gen-data", "--users", "300", "--items", "40", "--seq-len", "8",
                            "--sliding-window", "--seed", "5", "--out", (root_ / "data").string()});
    ASSERT_EQ(gen.code, cli::kExitOk) << gen.err;
    const CliRun aux_run = run({"train-aux", "--data", (root_ / "data").string(), "--out",
                                (root_ / "aux").string(), "--dim", "8", "--epochs", "2",
                                "--seed", "5"});
    ASSERT_EQ(aux_run.code, cli::kExitOk) << aux_run.err;
    const CliRun sft_run = run({"train", "--loss", "sft", "--data", (root_ / "data").string(),
                                "--out", (root_ / "sft").string(), "--epochs", "3", "--lr",
                                "0.01", "--dim", "8", "--seed", "5"});
    ASSERT_EQ(sft_run.code, cli::kExitOk) << sft_run.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string data() { return (root_ / "data").string(); }
  static std::string aux() { return (root_ / "aux" / "aux.ckpt").string(); }
  static std::string sft() { return (root_ / "sft" / "policy.ckpt").string(); }
  static std::string dir(const std::string& name) { return (root_ / name).string(); }

  static fs::path root_;
};

fs::path CliTest::root_;

TEST_F(CliTest, GenDataWritesSplitAndManifest) {
  for (const char* f : {"catalog.tsv", "train.tsv", "val.tsv", "test.tsv", "pop.tsv",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(data()) / f)) << f;
  }
  const auto m = read_json(fs::path(data()) / "manifest.json");
  EXPECT_EQ(m["command"], "gen-data");
  EXPECT_EQ(m["seed"], 5);
  EXPECT_EQ(m["artifacts"].size(), 5u);
}

TEST_F(CliTest, GenDataIsDeterministic) {
  const CliRun again = run({"gen-data", "--users", "300", "--items", "40", "--seq-len", "8",
                            "--sliding-window", "--seed", "5", "--out", dir("data2")});
  ASSERT_EQ(again.code, cli::kExitOk);
  for (const char* f : {"catalog.tsv", "train.tsv", "val.tsv", "test.tsv", "pop.tsv",
                        "manifest.json"}) {
    EXPECT_EQ(cli::fnv1a_file((fs::path(data()) / f).string()),
              cli::fnv1a_file((fs::path(dir("data2")) / f).string()))
        << f;
  }
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({"gen-data", "--users", "10"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"train", "--data", data(), "--out", dir("x"), "--rho", "1.5"}).code,
            cli::kExitUsage);

  const CliRun dpo = run({"train", "--loss", "dpo", "--data", data(), "--out", dir("dpo_nosft")});
  EXPECT_EQ(dpo.code, cli::kExitUsage);
  EXPECT_NE(dpo.err.find("--sft"), std::string::npos);

  const CliRun napo = run({"train", "--data", data(), "--out", dir("napo_noaux")});
  EXPECT_EQ(napo.code, cli::kExitUsage);
  EXPECT_NE(napo.err.find("--aux"), std::string::npos);

  const CliRun missing = run({"eval", "--data", data(), "--out", dir("e0"), "--policy",
                           dir("nope.ckpt")});
  EXPECT_EQ(missing.code, cli::kExitUsage);
}

TEST_F(CliTest, DataErrors) {
  const fs::path bad = fs::path(dir("bad_ckpt"));
  fs::create_directories(bad);
  std::ofstream(bad / "policy.ckpt") << "not a checkpoint";
  EXPECT_EQ(run({"eval", "--data", data(), "--out", dir("e1"), "--policy",
                 (bad / "policy.ckpt").string()})
                .code,
            cli::kExitData);

  const fs::path raw = fs::path(dir("raw"));
  fs::create_directories(raw);
  std::ofstream(raw / "inter.tsv") << "u1\tA\t1\nu1\tBADITEM\t2\n";
  std::ofstream(raw / "items.tsv") << "A\tapple\n";
  const CliRun ingest = run({"ingest", "--interactions", (raw / "inter.tsv").string(), "--items",
                          (raw / "items.tsv").string(), "--out", dir("ingested")});
  EXPECT_EQ(ingest.code, cli::kExitData);
  EXPECT_NE(ingest.err.find("BADITEM"), std::string::npos);
}

TEST_F(CliTest, NapoDefaultsAreRecorded) {
  const CliRun r = run({"train", "--data", data(), "--out", dir("napo"), "--aux", aux(), "--sft",
                     sft(), "--epochs", "1", "--dim", "8"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto m = read_json(fs::path(dir("napo")) / "manifest.json");
  EXPECT_EQ(m["config"]["loss_kind"], "napo");
  EXPECT_EQ(m["config"]["gamma0"], 1.0);
  EXPECT_EQ(m["config"]["rho"], 0.7);
  EXPECT_EQ(m["config"]["alpha"], 0.3);
  EXPECT_EQ(m["config"]["momentum"], 0.9);
  EXPECT_TRUE(m["inputs"].contains("aux"));
  EXPECT_TRUE(fs::exists(fs::path(dir("napo")) / "policy.ckpt"));

  std::istringstream lines(slurp(fs::path(dir("napo")) / "report.jsonl"));
  std::string line;
  size_t batches = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["kind"] == "batch") {
      ++batches;
      EXPECT_TRUE(j.contains("gamma"));
      EXPECT_TRUE(j.contains("effective_negatives_mean"));
    }
  }
  EXPECT_GT(batches, 0u);
}

TEST_F(CliTest, ConfigFileAndFlagOverride) {
  const fs::path cfg = fs::path(dir("cfg.json"));
  std::ofstream(cfg) << R"({"loss_kind": "simpo", "gamma0": 0.5, "epochs": 1, "policy_dim": 8})";
  const CliRun r = run({"train", "--data", data(), "--out", dir("simpo"), "--config", cfg.string(),
                     "--gamma0", "0.25"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto m = read_json(fs::path(dir("simpo")) / "manifest.json");
  EXPECT_EQ(m["config"]["loss_kind"], "simpo");
  EXPECT_EQ(m["config"]["gamma0"], 0.25);

  std::ofstream(fs::path(dir("cfg_bad.json"))) << R"({"gama0": 0.5})";
  EXPECT_EQ(run({"train", "--data", data(), "--out", dir("bad"), "--config", dir("cfg_bad.json")})
                .code,
            cli::kExitUsage);
}

TEST_F(CliTest, EvalReportsRelativeImprovement) {
  const CliRun t = run({"train", "--loss", "sdpo", "--rho", "0", "--data", data(), "--out",
                     dir("sdpo"), "--sft", sft(), "--epochs", "1", "--dim", "8"});
  ASSERT_EQ(t.code, cli::kExitOk) << t.err;
  const CliRun e = run({"eval", "--data", data(), "--out", dir("eval"), "--policy",
                     (fs::path(dir("sdpo")) / "policy.ckpt").string(), "--baseline", sft()});
  ASSERT_EQ(e.code, cli::kExitOk) << e.err;
  const auto j = read_json(fs::path(dir("eval")) / "eval.json");
  EXPECT_TRUE(j["relative_improvement"].contains("hit_ratio_1_pct"));
  EXPECT_TRUE(j["relative_improvement"].contains("pop_bias_expectation_pct"));
  EXPECT_NE(e.out.find("HitRatio@1"), std::string::npos);

  const std::string before = cli::fnv1a_file(sft());
  ASSERT_EQ(run({"eval", "--data", data(), "--out", dir("eval2"), "--policy", sft()}).code,
            cli::kExitOk);
  EXPECT_EQ(cli::fnv1a_file(sft()), before);
}

TEST_F(CliTest, BenchCountsAndCoverage) {
  const CliRun r = run({"bench", "--data", data(), "--out", dir("bench"), "--aux", aux(),
                     "--n-neg", "3", "--rho", "0,0.7", "--batch-size", "16", "--batches", "1"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  std::istringstream tsv(slurp(fs::path(dir("bench")) / "bench.tsv"));
  std::string line;
  std::getline(tsv, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(tsv, line)) {
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, '\t')) cols.push_back(c);
    rows.push_back(cols);
  }
  std::vector<std::vector<std::string>> shared;
  for (const auto& row : rows) {
    if (row[0] == "shared") shared.push_back(row);
  }
  ASSERT_EQ(shared.size(), 2u);
  EXPECT_EQ(shared[0][3], "0");
  EXPECT_EQ(shared[1][3], "10");
  // g calls per batch do not depend on rho.
  EXPECT_EQ(shared[0][7], shared[1][7]);
  EXPECT_EQ(std::stod(shared[0][7]), 64.0);
  EXPECT_EQ(std::stod(shared[0][8]), 3.0);
  EXPECT_LE(std::stod(shared[1][8]), 33.0);
  EXPECT_GT(std::stod(shared[1][8]), 30.0);
}

}  // namespace
}  // namespace napo
