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

#include <cmath>
#include <limits>
#include <vector>

#include "napo/numeric.h"
#include "test_support.h"

namespace napo {
namespace {

TEST(Softplus, MatchesNaiveFormAtModerateArguments) {
  for (double x : {-20.0, -3.0, -0.5, 0.0, 0.5, 3.0, 20.0}) {
    EXPECT_NEAR(softplus(x), std::log1p(std::exp(x)), 1e-14 * (1 + std::abs(x)));
  }
}

TEST(Softplus, FiniteAtExtremeArguments) {
  EXPECT_DOUBLE_EQ(softplus(1000.0), 1000.0);
  EXPECT_EQ(softplus(-1000.0), 0.0);
  EXPECT_TRUE(std::isfinite(softplus(1e300)));
}

TEST(Sigmoid, SymmetricAndBounded) {
  testing::Gen gen(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = gen.uniform(-800, 800);
    const double s = sigmoid(x);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_NEAR(s + sigmoid(-x), 1.0, 1e-15);
  }
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
}

TEST(Logsumexp, ShiftInvariantAndStable) {
  testing::Gen gen(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(1 + gen.index(8));
    for (double& x : xs) x = gen.uniform(-5, 5);
    double naive = 0.0;
    for (double x : xs) naive += std::exp(x);
    EXPECT_NEAR(logsumexp(xs), std::log(naive), 1e-12);
    const double c = gen.uniform(-1000, 1000);
    std::vector<double> shifted = xs;
    for (double& x : shifted) x += c;
    EXPECT_NEAR(logsumexp(shifted), logsumexp(xs) + c, 1e-9);
  }
  const std::vector<double> big = {1000.0, 1000.0};
  EXPECT_NEAR(logsumexp(big), 1000.0 + std::log(2.0), 1e-12);
}

TEST(Logsumexp, IgnoresNegativeInfinityEntries) {
  const double ninf = -std::numeric_limits<double>::infinity();
  const std::vector<double> xs = {0.0, ninf};
  EXPECT_DOUBLE_EQ(logsumexp(xs), 0.0);
}

TEST(Softmax, SumsToOneAndReturnsLogNormalizer) {
  testing::Gen gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(2 + gen.index(30));
    for (double& x : xs) x = gen.uniform(-700, 700);
    std::vector<double> p(xs.size());
    const double lse = softmax(xs, p);
    double sum = 0.0;
    for (double v : p) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_NEAR(lse, logsumexp(xs), 1e-12 * std::max(1.0, std::abs(lse)));
  }
}

}  // namespace
}  // namespace napo
