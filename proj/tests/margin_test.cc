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

#include "napo/errors.h"
#include "napo/margin.h"
#include "test_support.h"

namespace napo {
namespace {

TEST(Confidence, Endpoints) {
  EXPECT_EQ(confidence_from_relevance(-1.0), 1.0);
  EXPECT_EQ(confidence_from_relevance(0.0), 0.5);
  EXPECT_EQ(confidence_from_relevance(1.0), 0.0);
}

TEST(Confidence, InUnitIntervalForRandomModels) {
  testing::Gen gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const AuxParams aux = testing::random_aux(25, 1 + gen.index(8), gen.engine()());
    for (int k = 0; k < 200; ++k) {
      std::vector<ItemId> seq;
      for (size_t i = 0; i < 1 + gen.index(5); ++i) seq.push_back(static_cast<ItemId>(gen.index(25)));
      const double c = confidence(aux, seq, static_cast<ItemId>(gen.index(25)));
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 1.0);
    }
  }
}

TEST(BatchGamma, FirstBatchIsNeutral) {
  const MarginState s = MarginState::create(1.0, 0.3, 0.9);
  const auto [gamma, next] = batch_gamma(s, 0.73);
  EXPECT_EQ(gamma, 1.0);
  EXPECT_TRUE(next.r0_initialized);
  EXPECT_EQ(next.r0, 0.73);
  EXPECT_EQ(next.step, 1);
}

TEST(BatchGamma, WorkedArithmetic) {
  MarginState s = MarginState::create(1.0, 0.3, 0.9);
  s.r0 = 0.2;
  s.r0_initialized = true;
  EXPECT_NEAR(batch_gamma(s, 0.7).first, 1.15, 1e-15);
  s.r0 = 0.5;
  EXPECT_NEAR(batch_gamma(s, 0.7).second.r0, 0.52, 1e-15);
  EXPECT_NEAR(batch_gamma(s, 0.5).first, 1.0, 1e-15);
}

TEST(BatchGamma, ZeroAlphaIsFixed) {
  MarginState s = MarginState::create(0.8, 0.0, 0.9);
  testing::Gen gen(2);
  for (int t = 0; t < 100; ++t) {
    auto [g, next] = batch_gamma(s, gen.uniform(0, 1));
    EXPECT_EQ(g, 0.8);
    s = next;
  }
}

TEST(BatchGamma, ClosedFormBaseline) {
  testing::Gen gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double m = gen.uniform(0, 0.99);
    const double r = gen.uniform(0, 1);
    const double c = gen.uniform(0, 1);
    MarginState s = MarginState::create(1.0, 0.3, m);
    s.r0 = r;
    s.r0_initialized = true;
    for (int t = 1; t <= 100; ++t) {
      s = batch_gamma(s, c).second;
      const double mt = std::pow(m, t);
      EXPECT_NEAR(s.r0, mt * r + (1 - mt) * c, 1e-12);
    }
  }
}

TEST(BatchGamma, BoundedOverRandomRuns) {
  testing::Gen gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    const double g0 = gen.uniform(0, 3);
    const double alpha = gen.uniform(0, 2);
    MarginState s = MarginState::create(g0, alpha, gen.uniform(0, 0.99));
    for (int t = 0; t < 100; ++t) {
      auto [g, next] = batch_gamma(s, gen.uniform(0, 1));
      EXPECT_GE(g, 0.0);
      EXPECT_LE(g, (1 + alpha) * g0 + 1e-12);
      EXPECT_GE(next.r0, 0.0);
      EXPECT_LE(next.r0, 1.0);
      s = next;
    }
  }
}

TEST(BatchGamma, ClampsAtZero) {
  MarginState s = MarginState::create(1.0, 3.0, 0.5);
  s.r0 = 0.9;
  s.r0_initialized = true;
  EXPECT_EQ(batch_gamma(s, 0.0).first, 0.0);
}

TEST(BatchGamma, RejectsBadInputs) {
  const MarginState s = MarginState::create(1.0, 0.3, 0.9);
  EXPECT_THROW(batch_gamma(s, 1.5), UsageError);
  EXPECT_THROW(batch_gamma(s, -0.1), UsageError);
  EXPECT_THROW(batch_gamma(s, std::nan("")), UsageError);
  EXPECT_THROW(MarginState::create(-1.0, 0.3, 0.9), UsageError);
  EXPECT_THROW(MarginState::create(1.0, -0.3, 0.9), UsageError);
  EXPECT_THROW(MarginState::create(1.0, 0.3, 1.0), UsageError);
}

TEST(MeanConfidence, RaggedFixtures) {
  EXPECT_NEAR(mean_confidence({{0.2, 0.4}, {0.6}}), 0.4, 1e-15);
  EXPECT_EQ(mean_confidence({{0.3, 0.3}, {0.3}, {0.3, 0.3, 0.3}}), 0.3);
  EXPECT_THROW(mean_confidence({{}, {}}), UsageError);
}

TEST(BatchMeanConfidence, ScoresAgainstTheReceivingSequence) {
  const AuxParams aux = testing::random_aux(20, 5, 5);
  const std::vector<std::vector<ItemId>> seqs = {{1, 2}, {3}};
  std::vector<HybridNegativeSet> sets(2);
  sets[0].own = {{7, {}, 0, 0, GradientLinkage::kFlowThrough},
                 {8, {}, 0, 1, GradientLinkage::kFlowThrough}};
  sets[0].shared = {{9, {}, 1, 0, GradientLinkage::kFlowThrough}};
  sets[1].own = {{9, {}, 1, 0, GradientLinkage::kFlowThrough}};
  const double want = (confidence(aux, seqs[0], 7) + confidence(aux, seqs[0], 8) +
                       confidence(aux, seqs[0], 9) + confidence(aux, seqs[1], 9)) /
                      4.0;
  EXPECT_NEAR(batch_mean_confidence(aux, seqs, sets), want, 1e-15);

  // Without shared entries only own negatives count.
  sets[0].shared.clear();
  const double own_only = (confidence(aux, seqs[0], 7) + confidence(aux, seqs[0], 8) +
                           confidence(aux, seqs[1], 9)) /
                          3.0;
  EXPECT_NEAR(batch_mean_confidence(aux, seqs, sets), own_only, 1e-15);
}

}  // namespace
}  // namespace napo
