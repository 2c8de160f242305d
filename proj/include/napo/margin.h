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

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "napo/aux_rec.h"
#include "napo/sharing.h"

namespace napo {

// Batch-level reward margin:
//   gamma = max(0, (1 + alpha * (E[conf] - r0)) * gamma0)
//   r0   <- momentum * r0 + (1 - momentum) * E[conf]
// r0 starts at the first batch's mean confidence, so the first gamma is
// gamma0 exactly.
struct MarginState {
  double gamma0 = 1.0;
  double alpha = 0.3;
  double momentum = 0.9;
  double r0 = 0.0;
  bool r0_initialized = false;
  int64_t step = 0;

  static MarginState create(double gamma0, double alpha, double momentum);
};

// 1/2 (1 - relevance), relevance in [-1, 1].
double confidence_from_relevance(double relevance);
double confidence(const AuxParams& aux, std::span<const ItemId> sequence, ItemId negative);

// Emits gamma for this batch, then advances r0 and the step counter.
std::pair<double, MarginState> batch_gamma(const MarginState& state, double batch_mean_conf);

// Mean of conf(s_u, y) over every entry of every E_u, each scored against
// the receiving sequence s_u (shared entries included).
double batch_mean_confidence(const AuxParams& aux,
                             const std::vector<std::vector<ItemId>>& sequences,
                             const std::vector<HybridNegativeSet>& sets);

// Mean over a ragged table of confidence values.
double mean_confidence(const std::vector<std::vector<double>>& conf);

}  // namespace napo
