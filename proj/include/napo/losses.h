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

#include <span>
#include <vector>

#include "napo/policy.h"
#include "napo/sharing.h"

namespace napo {

// Loss value plus its partial derivatives with respect to the score values
// that went in (H, or H-hat when the reference is used; both have the same
// derivative with respect to the policy because the reference is frozen).
struct LossResult {
  double value = 0.0;
  double d_positive = 0.0;
  std::vector<double> d_negatives;
};

// -log pi(y+|x) = -h / beta
LossResult sft_loss(const PolicyScore& positive);

// -log sigmoid(Hhat+ - Hhat-)
LossResult dpo_loss(const PolicyScore& positive, const PolicyScore& negative);

// -log sigmoid(H+/|y+| - H-/|y-| - gamma0); lengths are 1 when
// length_normalize is false.
LossResult simpo_loss(const PolicyScore& positive, const PolicyScore& negative, double gamma0,
                      bool length_normalize = true);

// -log sigmoid(Hhat+ - logsumexp(Hhat-)). With use_reference=false the raw
// H values are used instead.
LossResult sdpo_loss(const PolicyScore& positive, std::span<const PolicyScore> negatives,
                     bool use_reference = true);

struct PreferenceInput {
  PolicyScore positive;
  std::vector<PolicyScore> negatives;
  double gamma = 0.0;
  bool length_normalize = false;
  bool use_reference = false;
  // Comparison-only variant: the positive also appears in the denominator.
  bool include_positive_in_denominator = false;
};

// -log sigmoid(log p - gamma),  log p = H+ - logsumexp_{y- in E} H-
LossResult napo_loss(const PreferenceInput& input);
LossResult napo_loss(const PolicyScore& positive, const HybridNegativeSet& negatives,
                     double gamma, bool length_normalize = false);

}  // namespace napo
