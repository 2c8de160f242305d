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

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "napo/checkpoint.h"
#include "napo/data.h"
#include "napo/tensor.h"

namespace napo {

// Lightweight sequential recommender used only for similarity and
// confidence. Sequence embedding:
//   SR-EMB(s) = normalize(tanh(W * mean_i E[s_i] + b))
// Relevance of item i: cosine(SR-EMB(s), E[i]) in [-1, 1].
struct AuxParams {
  static constexpr std::array<std::string_view, 3> kTensorNames = {
      "item_embeddings", "encoder_weight", "encoder_bias"};

  size_t n_items = 0;
  size_t dim = 0;
  Tensor item_embeddings;  // [n_items x dim]
  Tensor encoder_weight;   // [dim x dim]
  Tensor encoder_bias;     // [dim]

  static AuxParams zeros(size_t n_items, size_t dim);
  static AuxParams init(size_t n_items, size_t dim, uint64_t seed);

  std::array<Tensor*, 3> tensors() { return {&item_embeddings, &encoder_weight, &encoder_bias}; }
  std::array<const Tensor*, 3> tensors() const {
    return {&item_embeddings, &encoder_weight, &encoder_bias};
  }

  Checkpoint to_checkpoint() const;
  static AuxParams from_checkpoint(const Checkpoint& ckpt);

  bool operator==(const AuxParams&) const = default;
};

using SeqEmbedding = std::vector<double>;

SeqEmbedding sr_emb(const AuxParams& params, std::span<const ItemId> sequence);
double sr_score(const AuxParams& params, std::span<const ItemId> sequence, ItemId item);
// Cosine of a precomputed sequence embedding against item's embedding.
double sr_score(const AuxParams& params, const SeqEmbedding& embedding, ItemId item);
double similarity(const AuxParams& params, std::span<const ItemId> seq_u,
                  std::span<const ItemId> seq_v);
// Inner products of unit embeddings; symmetric with unit diagonal.
std::vector<std::vector<double>> similarity_matrix(const std::vector<SeqEmbedding>& embeddings);

struct AuxTrainConfig {
  size_t dim = 16;
  size_t epochs = 10;
  double lr = 5e-3;
  uint64_t seed = 0;
  size_t n_negatives = 50;
  double temperature = 10.0;  // logits are temperature * cosine
  size_t batch_size = 64;
};

struct AuxTrainResult {
  AuxParams params;
  std::vector<double> epoch_losses;
};

// Sampled-softmax next-item training over every prefix of the training
// sequences (context + positive of each training instance).
AuxTrainResult train_aux(const DatasetSplit& split, const AuxTrainConfig& config);

}  // namespace napo
