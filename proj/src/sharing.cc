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

#include "napo/sharing.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "napo/errors.h"

namespace napo {

std::string_view to_string(GradientLinkage linkage) {
  return linkage == GradientLinkage::kFlowThrough ? "flow" : "detach";
}

GradientLinkage parse_gradient_linkage(std::string_view s) {
  if (s == "flow") return GradientLinkage::kFlowThrough;
  if (s == "detach") return GradientLinkage::kDetached;
  throw UsageError("unknown gradient linkage '" + std::string(s) + "' (expected flow|detach)");
}

std::vector<const NegativeEntry*> HybridNegativeSet::entries() const {
  std::vector<const NegativeEntry*> out;
  out.reserve(effective_count());
  for (const auto& e : own) out.push_back(&e);
  for (const auto& e : shared) out.push_back(&e);
  return out;
}

std::vector<PolicyScore> HybridNegativeSet::scores() const {
  std::vector<PolicyScore> out;
  out.reserve(effective_count());
  for (const auto* e : entries()) out.push_back(e->score);
  return out;
}

size_t top_k_count(size_t batch_size, double rho) {
  if (batch_size <= 1 || rho <= 0) return 0;
  // The epsilon keeps products like 10 * 0.7 from flooring to 6.
  const double k = std::floor(static_cast<double>(batch_size - 1) * rho + 1e-9);
  return std::min(batch_size - 1, static_cast<size_t>(k));
}

std::vector<std::vector<size_t>> select_share_partners(const std::vector<std::vector<double>>& sim,
                                                       size_t k) {
  const size_t n = sim.size();
  std::vector<std::vector<size_t>> partners(n);
  if (n == 0) return partners;
  k = std::min(k, n - 1);
  for (size_t u = 0; u < n; ++u) {
    std::vector<size_t> others;
    for (size_t v = 0; v < n; ++v) {
      if (v != u) others.push_back(v);
    }
    std::stable_sort(others.begin(), others.end(),
                     [&](size_t a, size_t b) { return sim[u][a] > sim[u][b]; });
    partners[u].assign(others.begin(), others.begin() + k);
  }
  return partners;
}

std::vector<std::vector<size_t>> select_share_partners(
    const AuxParams& aux, const std::vector<std::vector<ItemId>>& batch_sequences, double rho) {
  if (batch_sequences.empty()) throw UsageError("cannot select partners for an empty batch");
  const size_t k = top_k_count(batch_sequences.size(), rho);
  if (k == 0) return std::vector<std::vector<size_t>>(batch_sequences.size());
  std::vector<SeqEmbedding> emb;
  emb.reserve(batch_sequences.size());
  for (const auto& s : batch_sequences) emb.push_back(sr_emb(aux, s));
  return select_share_partners(similarity_matrix(emb), k);
}

std::vector<HybridNegativeSet> assemble_hybrid_sets(const std::vector<OwnNegatives>& batch,
                                                    const std::vector<std::vector<size_t>>& partners,
                                                    GradientLinkage linkage,
                                                    AssembleStats* stats) {
  if (partners.size() != batch.size()) throw UsageError("partners/batch size mismatch");
  std::vector<HybridNegativeSet> sets(batch.size());
  size_t collisions = 0;
  size_t total = 0;
  for (size_t u = 0; u < batch.size(); ++u) {
    const OwnNegatives& mine = batch[u];
    if (mine.items.size() != mine.scores.size()) throw UsageError("own negatives not scored");
    for (size_t j = 0; j < mine.items.size(); ++j) {
      sets[u].own.push_back(
          {mine.items[j], mine.scores[j], u, j, GradientLinkage::kFlowThrough});
    }
    std::vector<size_t> origins = partners[u];
    std::sort(origins.begin(), origins.end());
    for (size_t v : origins) {
      if (v >= batch.size() || v == u) throw UsageError("invalid share partner index");
      const OwnNegatives& theirs = batch[v];
      for (size_t j = 0; j < theirs.items.size(); ++j) {
        if (theirs.items[j] == mine.positive) {
          ++collisions;
          continue;
        }
        sets[u].shared.push_back({theirs.items[j], theirs.scores[j], v, j, linkage});
      }
    }
    total += sets[u].effective_count();
  }
  if (stats) {
    stats->collisions_filtered = collisions;
    stats->effective_negatives_mean =
        batch.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(batch.size());
  }
  return sets;
}

BatchScores score_batch(ForwardPass& pass, const Catalog& catalog,
                        std::span<const TrainingInstance> batch) {
  BatchScores out;
  for (const auto& inst : batch) {
    const size_t ctx = pass.encode_context(catalog.prompt_tokens(inst.prompt_context));
    out.contexts.push_back(ctx);
    out.positives.push_back(pass.score_response(ctx, catalog.response_tokens(inst.positive)));
    std::vector<size_t> negs;
    for (ItemId n : inst.sampled_negatives) {
      negs.push_back(pass.score_response(ctx, catalog.response_tokens(n)));
    }
    out.negatives.push_back(std::move(negs));
  }
  return out;
}

std::vector<OwnNegatives> own_negatives(const ForwardPass& pass, const BatchScores& scores,
                                        std::span<const TrainingInstance> batch) {
  std::vector<OwnNegatives> out(batch.size());
  for (size_t u = 0; u < batch.size(); ++u) {
    out[u].positive = batch[u].positive;
    out[u].items = batch[u].sampled_negatives;
    for (size_t h : scores.negatives[u]) out[u].scores.push_back(pass.score(h));
  }
  return out;
}

DenseOracleResult naive_dense_oracle(const PolicyParams& params, const Catalog& catalog,
                                     std::span<const TrainingInstance> batch, size_t max_batch) {
  if (batch.size() > max_batch) {
    throw UsageError("dense oracle refuses batch of " + std::to_string(batch.size()) +
                     " (cap " + std::to_string(max_batch) + ")");
  }
  ForwardPass pass(params, false);
  DenseOracleResult out;
  out.scores.resize(batch.size());
  for (size_t u = 0; u < batch.size(); ++u) {
    const size_t ctx = pass.encode_context(catalog.prompt_tokens(batch[u].prompt_context));
    out.positives.push_back(
        pass.score(pass.score_response(ctx, catalog.response_tokens(batch[u].positive))));
    out.scores[u].resize(batch.size());
    for (size_t v = 0; v < batch.size(); ++v) {
      for (ItemId n : batch[v].sampled_negatives) {
        out.scores[u][v].push_back(pass.score(pass.score_response(ctx, catalog.response_tokens(n))));
      }
    }
  }
  out.counters = pass.counters();
  return out;
}

}  // namespace napo
