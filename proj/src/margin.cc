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

#include "napo/margin.h"

#include <algorithm>
#include <string>

#include "napo/errors.h"

namespace napo {

MarginState MarginState::create(double gamma0, double alpha, double momentum) {
  if (!(gamma0 >= 0)) throw UsageError("gamma0 must be >= 0");
  if (!(alpha >= 0)) throw UsageError("alpha must be >= 0");
  if (!(momentum >= 0 && momentum < 1)) throw UsageError("momentum must be in [0, 1)");
  MarginState s;
  s.gamma0 = gamma0;
  s.alpha = alpha;
  s.momentum = momentum;
  return s;
}

double confidence_from_relevance(double relevance) { return 0.5 * (1.0 - relevance); }

double confidence(const AuxParams& aux, std::span<const ItemId> sequence, ItemId negative) {
  return confidence_from_relevance(sr_score(aux, sequence, negative));
}

std::pair<double, MarginState> batch_gamma(const MarginState& state, double batch_mean_conf) {
  if (!(batch_mean_conf >= 0 && batch_mean_conf <= 1)) {
    throw UsageError("batch mean confidence must lie in [0, 1]");
  }
  MarginState next = state;
  if (!next.r0_initialized) {
    next.r0 = batch_mean_conf;
    next.r0_initialized = true;
  }
  const double gamma =
      std::max(0.0, (1.0 + next.alpha * (batch_mean_conf - next.r0)) * next.gamma0);
  next.r0 = next.momentum * next.r0 + (1.0 - next.momentum) * batch_mean_conf;
  ++next.step;
  return {gamma, next};
}

double mean_confidence(const std::vector<std::vector<double>>& conf) {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& row : conf) {
    for (double c : row) {
      sum += c;
      ++n;
    }
  }
  if (n == 0) throw UsageError("mean confidence over an empty batch");
  return sum / static_cast<double>(n);
}

double batch_mean_confidence(const AuxParams& aux,
                             const std::vector<std::vector<ItemId>>& sequences,
                             const std::vector<HybridNegativeSet>& sets) {
  if (sequences.size() != sets.size()) throw UsageError("sequences/sets size mismatch");
  std::vector<std::vector<double>> conf(sets.size());
  for (size_t u = 0; u < sets.size(); ++u) {
    const SeqEmbedding emb = sr_emb(aux, sequences[u]);
    for (const NegativeEntry* e : sets[u].entries()) {
      conf[u].push_back(confidence_from_relevance(sr_score(aux, emb, e->item_id)));
    }
  }
  return mean_confidence(conf);
}

}  // namespace napo
