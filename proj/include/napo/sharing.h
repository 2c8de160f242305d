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
#include <string_view>
#include <vector>

#include "napo/aux_rec.h"
#include "napo/data.h"
#include "napo/policy.h"

namespace napo {

// Whether a shared score stays connected to the policy parameters through
// the receiving sequence's loss.
enum class GradientLinkage { kFlowThrough, kDetached };

std::string_view to_string(GradientLinkage linkage);
GradientLinkage parse_gradient_linkage(std::string_view s);

// One negative in a hybrid set. `score` was computed under the prompt of
// batch position `origin_index`; `slot` is its index among that origin's
// own sampled negatives.
struct NegativeEntry {
  ItemId item_id = 0;
  PolicyScore score;
  size_t origin_index = 0;
  size_t slot = 0;
  GradientLinkage gradient_linkage = GradientLinkage::kFlowThrough;
};

struct HybridNegativeSet {
  std::vector<NegativeEntry> own;
  std::vector<NegativeEntry> shared;

  size_t effective_count() const { return own.size() + shared.size(); }
  // own followed by shared
  std::vector<const NegativeEntry*> entries() const;
  std::vector<PolicyScore> scores() const;
};

// K = floor((batch_size - 1) * rho)
size_t top_k_count(size_t batch_size, double rho);

// For each u, the k indices v != u with the highest sim[u][v]; ties go to
// the lower index. Result lists are in descending similarity order.
std::vector<std::vector<size_t>> select_share_partners(const std::vector<std::vector<double>>& sim,
                                                       size_t k);
std::vector<std::vector<size_t>> select_share_partners(
    const AuxParams& aux, const std::vector<std::vector<ItemId>>& batch_sequences, double rho);

// A batch position's own scored negatives.
struct OwnNegatives {
  ItemId positive = 0;
  std::vector<ItemId> items;
  std::vector<PolicyScore> scores;
};

struct AssembleStats {
  size_t collisions_filtered = 0;
  double effective_negatives_mean = 0.0;
};

// E_u = own_u plus own_v for every partner v, dropping shared entries equal
// to u's positive. Items repeated across origins are kept. Shared entries
// are ordered by (origin_index, slot). Performs no policy evaluations.
std::vector<HybridNegativeSet> assemble_hybrid_sets(const std::vector<OwnNegatives>& batch,
                                                    const std::vector<std::vector<size_t>>& partners,
                                                    GradientLinkage linkage,
                                                    AssembleStats* stats = nullptr);

// Handles into a ForwardPass for one scored batch: b F-calls and
// b * (1 + n_neg) G-calls.
struct BatchScores {
  std::vector<size_t> contexts;
  std::vector<size_t> positives;
  std::vector<std::vector<size_t>> negatives;
};

BatchScores score_batch(ForwardPass& pass, const Catalog& catalog,
                        std::span<const TrainingInstance> batch);

std::vector<OwnNegatives> own_negatives(const ForwardPass& pass, const BatchScores& scores,
                                        std::span<const TrainingInstance> batch);

// Scores every batch negative under every batch prompt:
// scores[u][v][j] = G(F(x_u), y_{v,j}). Counts b F-calls and
// b * (1 + b * n_neg) G-calls.
struct DenseOracleResult {
  std::vector<PolicyScore> positives;
  std::vector<std::vector<std::vector<PolicyScore>>> scores;
  OpCounters counters;
};

DenseOracleResult naive_dense_oracle(const PolicyParams& params, const Catalog& catalog,
                                     std::span<const TrainingInstance> batch,
                                     size_t max_batch = 64);

}  // namespace napo
