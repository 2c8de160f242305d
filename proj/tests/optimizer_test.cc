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
#include "napo/optimizer.h"

namespace napo {
namespace {

TEST(Optimizer, PlainDescentStep) {
  Tensor p = Tensor::zeros({3});
  p.values = {1.0, -2.0, 0.5};
  Tensor g = Tensor::zeros({3});
  g.values = {0.3, -1.0, 0.0};
  Optimizer opt(OptimizerConfig{OptimizerKind::kSgd, 0.1});
  Tensor* ps[] = {&p};
  const Tensor* gs[] = {&g};
  opt.step(ps, gs);
  EXPECT_EQ(p.values[0], 1.0 - 0.1 * 0.3);
  EXPECT_EQ(p.values[1], -2.0 - 0.1 * -1.0);
  EXPECT_EQ(p.values[2], 0.5);
}

TEST(Optimizer, ZeroGradientLeavesParameters) {
  for (OptimizerKind kind : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    Tensor p = Tensor::zeros({2});
    p.values = {0.25, -4.0};
    const Tensor before = p;
    Tensor g = Tensor::zeros({2});
    Optimizer opt(OptimizerConfig{kind, 0.01});
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    for (int i = 0; i < 5; ++i) opt.step(ps, gs);
    EXPECT_EQ(p, before);
  }
}

TEST(Optimizer, AdaptiveStepApproachesLearningRate) {
  // m_t / (sqrt(v_t) + eps) -> g / |g| under a constant gradient.
  Tensor p = Tensor::zeros({1});
  Tensor g = Tensor::zeros({1});
  g.values = {0.37};
  const double lr = 1e-3;
  Optimizer opt(OptimizerConfig{OptimizerKind::kAdam, lr});
  Tensor* ps[] = {&p};
  const Tensor* gs[] = {&g};
  double last_step = 0.0;
  for (int t = 1; t <= 2000; ++t) {
    const double before = p.values[0];
    opt.step(ps, gs);
    last_step = before - p.values[0];
    if (t == 1) EXPECT_NEAR(last_step, lr * 0.37 / (0.37 + 1e-8), 1e-15);
  }
  EXPECT_NEAR(last_step, lr, 1e-9);
  EXPECT_EQ(opt.steps(), 2000);
}

TEST(ClipGlobalNorm, ScalesOnlyAboveCap) {
  Tensor a = Tensor::zeros({2});
  a.values = {3.0, 0.0};
  Tensor b = Tensor::zeros({1});
  b.values = {4.0};
  Tensor* gs[] = {&a, &b};
  EXPECT_EQ(clip_global_norm(gs, 10.0), 5.0);
  EXPECT_EQ(a.values[0], 3.0);
  EXPECT_EQ(clip_global_norm(gs, 1.0), 5.0);
  EXPECT_NEAR(a.values[0], 0.6, 1e-15);
  EXPECT_NEAR(b.values[0], 0.8, 1e-15);
}

TEST(OptimizerKind, ParsesNames) {
  EXPECT_EQ(parse_optimizer_kind("sgd"), OptimizerKind::kSgd);
  EXPECT_EQ(parse_optimizer_kind("adam"), OptimizerKind::kAdam);
  EXPECT_THROW(parse_optimizer_kind("rmsprop"), UsageError);
}

}  // namespace
}  // namespace napo
