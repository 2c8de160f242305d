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

#include "napo/aux_rec.h"
#include "napo/errors.h"
#include "test_support.h"

namespace napo {
namespace {

// Identity encoder in two dimensions so embeddings are easy to place by hand.
AuxParams planar_aux(const std::vector<std::array<double, 2>>& items) {
  AuxParams a = AuxParams::zeros(items.size(), 2);
  for (size_t i = 0; i < items.size(); ++i) {
    a.item_embeddings(i, 0) = items[i][0];
    a.item_embeddings(i, 1) = items[i][1];
  }
  a.encoder_weight(0, 0) = 1.0;
  a.encoder_weight(1, 1) = 1.0;
  return a;
}

std::array<double, 2> unit_tanh(double x, double y) {
  const double a = std::tanh(x), b = std::tanh(y);
  const double n = std::hypot(a, b);
  return {a / n, b / n};
}

TEST(SrEmb, UnitNormAndDeterministic) {
  const AuxParams a = testing::random_aux(30, 8, 1);
  testing::Gen gen(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ItemId> seq;
    for (size_t i = 0; i < 1 + gen.index(10); ++i) seq.push_back(static_cast<ItemId>(gen.index(30)));
    const SeqEmbedding e = sr_emb(a, seq);
    double n = 0.0;
    for (double v : e) n += v * v;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
    EXPECT_EQ(sr_emb(a, seq), e);
  }
}

TEST(SrEmb, SingleItemPath) {
  const AuxParams a = planar_aux({{0.5, 0.2}, {1, 1}});
  const std::vector<ItemId> seq = {0};
  const auto e = sr_emb(a, seq);
  const auto want = unit_tanh(0.5, 0.2);
  EXPECT_NEAR(e[0], want[0], 1e-15);
  EXPECT_NEAR(e[1], want[1], 1e-15);
}

TEST(SrScore, CosineIdentities) {
  const auto u = unit_tanh(0.5, 0.2);
  const AuxParams a = planar_aux({{0.5, 0.2},
                                  {3 * u[0], 3 * u[1]},
                                  {-u[1], u[0]},
                                  {-2 * u[0], -2 * u[1]}});
  const std::vector<ItemId> seq = {0};
  EXPECT_NEAR(sr_score(a, seq, 1), 1.0, 1e-15);
  EXPECT_NEAR(sr_score(a, seq, 2), 0.0, 1e-15);
  EXPECT_NEAR(sr_score(a, seq, 3), -1.0, 1e-15);
  EXPECT_LE(sr_score(a, seq, 1), 1.0);
  EXPECT_GE(sr_score(a, seq, 3), -1.0);
}

TEST(SrScore, AlwaysInRange) {
  testing::Gen gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const AuxParams a = testing::random_aux(20, 1 + gen.index(6), gen.engine()());
    for (int k = 0; k < 50; ++k) {
      std::vector<ItemId> seq;
      for (size_t i = 0; i < 1 + gen.index(6); ++i) seq.push_back(static_cast<ItemId>(gen.index(20)));
      const double s = sr_score(a, seq, static_cast<ItemId>(gen.index(20)));
      EXPECT_GE(s, -1.0);
      EXPECT_LE(s, 1.0);
    }
  }
}

TEST(SrScore, UnknownItemThrows) {
  const AuxParams a = testing::random_aux(5, 3, 4);
  const std::vector<ItemId> seq = {1};
  EXPECT_THROW(sr_score(a, seq, 5), DataError);
  const std::vector<ItemId> bad = {7};
  EXPECT_THROW(sr_emb(a, bad), DataError);
  EXPECT_THROW(sr_emb(a, std::vector<ItemId>{}), DataError);
}

TEST(Similarity, HandFixture) {
  const AuxParams a = planar_aux({{1.0, 0.0}, {0.8, 0.3}, {-0.2, 0.9}});
  const std::vector<std::vector<ItemId>> seqs = {{0}, {1}, {0, 2}};
  std::vector<std::array<double, 2>> e = {unit_tanh(1.0, 0.0), unit_tanh(0.8, 0.3),
                                          unit_tanh(0.4, 0.45)};
  std::vector<SeqEmbedding> embs;
  for (const auto& s : seqs) embs.push_back(sr_emb(a, s));
  const auto m = similarity_matrix(embs);
  for (size_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j < 3; ++j) {
      const double want = e[i][0] * e[j][0] + e[i][1] * e[j][1];
      EXPECT_NEAR(m[i][j], want, 1e-14);
      EXPECT_EQ(m[i][j], m[j][i]);
      EXPECT_NEAR(similarity(a, seqs[i], seqs[j]), want, 1e-14);
    }
    EXPECT_NEAR(m[i][i], 1.0, 1e-14);
  }
  EXPECT_EQ(similarity(a, seqs[0], seqs[2]), similarity(a, seqs[2], seqs[0]));
}

SyntheticCorpus aux_corpus(uint64_t seed) {
  SyntheticConfig sc;
  sc.n_users = 200;
  sc.n_items = 100;
  sc.seed = seed;
  SplitConfig split;
  split.sliding_window = true;
  return generate_synthetic(sc, split);
}

double aux_hit_ratio(const AuxParams& a, const std::vector<TrainingInstance>& xs) {
  size_t hits = 0;
  for (const auto& inst : xs) {
    ItemId best = inst.candidates[0];
    double best_score = -2.0;
    for (ItemId c : inst.candidates) {
      const double s = sr_score(a, inst.prompt_context, c);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    hits += best == inst.positive;
  }
  return static_cast<double>(hits) / static_cast<double>(xs.size());
}

TEST(TrainAux, BeatsRandomBaselineByThreeTimes) {
  for (uint64_t seed : {1, 2, 3}) {
    const SyntheticCorpus corpus = aux_corpus(seed);
    AuxTrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 5;
    const AuxTrainResult r = train_aux(corpus.split, cfg);
    ASSERT_EQ(r.epoch_losses.size(), 5u);
    EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
    EXPECT_GE(aux_hit_ratio(r.params, corpus.split.test), 3 * 0.05) << "seed " << seed;
  }
}

TEST(TrainAux, ZeroEpochsReturnsInitialization) {
  const SyntheticCorpus corpus = aux_corpus(4);
  AuxTrainConfig cfg;
  cfg.seed = 9;
  cfg.epochs = 0;
  const AuxTrainResult r = train_aux(corpus.split, cfg);
  EXPECT_EQ(r.params, AuxParams::init(corpus.split.catalog.size(), cfg.dim, cfg.seed));
  EXPECT_TRUE(r.epoch_losses.empty());
}

TEST(TrainAux, DeterministicPerSeed) {
  const SyntheticCorpus corpus = aux_corpus(5);
  AuxTrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 3;
  EXPECT_EQ(train_aux(corpus.split, cfg).params, train_aux(corpus.split, cfg).params);
}

TEST(TrainAux, RejectsDegenerateSplits) {
  DatasetSplit empty;
  EXPECT_THROW(train_aux(empty, AuxTrainConfig{}), DataError);
  DatasetSplit one;
  one.catalog = testing::toy_catalog(ResponseMode::kSingleToken, 1, 1);
  TrainingInstance inst;
  inst.prompt_context = {0};
  inst.positive = 0;
  one.train = {inst};
  EXPECT_THROW(train_aux(one, AuxTrainConfig{}), DataError);
}

TEST(AuxCheckpoint, RoundTrip) {
  const AuxParams a = testing::random_aux(12, 4, 6);
  EXPECT_EQ(AuxParams::from_checkpoint(a.to_checkpoint()), a);
}

}  // namespace
}  // namespace napo
