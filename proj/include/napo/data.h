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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "napo/tensor.h"

namespace napo {

using ItemId = int32_t;
using TokenId = int32_t;

// How an item is rendered as a policy response.
//  kSingleToken: item i is the one token i.
//  kMultiToken:  item i is its title's word tokens followed by end-of-response.
enum class ResponseMode { kSingleToken, kMultiToken };

std::string_view to_string(ResponseMode mode);
ResponseMode parse_response_mode(std::string_view s);

struct Item {
  ItemId item_id = 0;
  std::string key;  // identifier used in the source files
  std::vector<TokenId> title_tokens;
};

class Catalog {
 public:
  Catalog() = default;
  // In single-token mode title tokens are overwritten with {item_id} and
  // word_vocab is ignored.
  Catalog(ResponseMode mode, size_t word_vocab, std::vector<Item> items);

  size_t size() const { return items_.size(); }
  ResponseMode mode() const { return mode_; }
  bool contains(ItemId id) const { return id >= 0 && size_t(id) < items_.size(); }
  const Item& item(ItemId id) const;
  const std::vector<Item>& items() const { return items_; }
  std::optional<ItemId> find(std::string_view key) const;

  // Token vocabulary of the policy, end-of-response included as the last id.
  size_t vocab_size() const { return content_vocab_ + 1; }
  TokenId eos_token() const { return static_cast<TokenId>(content_vocab_); }

  std::vector<TokenId> response_tokens(ItemId id) const;
  std::vector<TokenId> prompt_tokens(std::span<const ItemId> context) const;
  // Item whose title is exactly `tokens` (end-of-response excluded).
  std::optional<ItemId> item_for_title(std::span<const TokenId> tokens) const;

 private:
  ResponseMode mode_ = ResponseMode::kSingleToken;
  size_t content_vocab_ = 0;
  std::vector<Item> items_;
  std::unordered_map<std::string, ItemId> by_key_;
  std::unordered_map<std::string, ItemId> by_title_;
};

struct InteractionSequence {
  int64_t user_id = 0;
  std::vector<ItemId> items;
  std::vector<int64_t> timestamps;
};

struct TrainingInstance {
  int64_t user_id = 0;
  std::vector<ItemId> prompt_context;
  ItemId positive = 0;
  int64_t target_timestamp = 0;
  std::vector<ItemId> candidates;         // ascending, contains positive
  std::vector<ItemId> sampled_negatives;  // disjoint from context and positive
};

struct DatasetSplit {
  Catalog catalog;
  std::vector<TrainingInstance> train;
  std::vector<TrainingInstance> validation;
  std::vector<TrainingInstance> test;
  std::vector<int64_t> pop_counts;  // per item, over training sequences only
};

struct SplitConfig {
  std::array<int, 3> ratio = {8, 1, 1};
  // false: one instance per user targeting its last item.
  // true: one instance per position 1..n-1 of every sequence.
  bool sliding_window = false;
  size_t min_interactions = 2;
  size_t candidate_size = 20;
  size_t n_neg = 3;
  uint64_t seed = 0;
};

struct IngestStats {
  size_t interactions = 0;
  size_t users_kept = 0;
  size_t users_dropped = 0;
};

// Mixes a tag and index into a base seed (splitmix64 finalizer).
uint64_t derive_seed(uint64_t base, uint64_t tag, uint64_t index = 0);

// n_neg distinct items drawn uniformly from {0..catalog_size-1} minus the
// context and the positive. Throws DataError when the pool is too small.
std::vector<ItemId> sample_negatives(size_t catalog_size, std::span<const ItemId> context,
                                     ItemId positive, size_t n_neg, uint64_t seed);

// Orders instances by target time, splits by `config.ratio`, samples
// candidates and negatives, and counts popularity over the training part.
DatasetSplit build_split(Catalog catalog, const std::vector<InteractionSequence>& sequences,
                         const SplitConfig& config);

// Tab-separated inputs:
//   interactions: user_key <TAB> item_key <TAB> integer timestamp
//   items:        item_key <TAB> title (whitespace-separated words)
// Blank lines and lines starting with '#' are skipped.
DatasetSplit ingest(const std::filesystem::path& interactions_file,
                    const std::filesystem::path& items_file, const SplitConfig& config,
                    ResponseMode mode = ResponseMode::kSingleToken,
                    IngestStats* stats = nullptr);

struct SyntheticConfig {
  size_t n_users = 100;
  size_t n_items = 200;
  size_t latent_dim = 4;
  size_t seq_len = 12;
  uint64_t seed = 0;
  ResponseMode mode = ResponseMode::kSingleToken;
  double affinity_scale = 3.0;  // sharpness of the preference softmax
  double transition_weight = 0.5;  // pull of the previous item on the next
  double popularity_spread = 0.5;  // stddev of per-item popularity offsets
  size_t title_words = 48;         // word vocabulary in multi-token mode
};

struct SyntheticCorpus {
  DatasetSplit split;
  std::vector<InteractionSequence> sequences;
  Tensor user_latent;  // [n_users x latent_dim]
  Tensor item_latent;  // [n_items x latent_dim]
};

// Latent affinity of user u for item i: <user_latent[u], item_latent[i]>.
double latent_affinity(const SyntheticCorpus& corpus, size_t user, ItemId item);

SyntheticCorpus generate_synthetic(const SyntheticConfig& config,
                                   const SplitConfig& split_config = {});

// Shuffled index batches over [0, n). The last batch may be short.
std::vector<std::vector<size_t>> make_batches(size_t n, size_t batch_size, uint64_t seed,
                                              uint64_t epoch);

// Brute-force popularity over the given instances' context + positive.
std::vector<int64_t> count_popularity(size_t catalog_size,
                                      const std::vector<TrainingInstance>& instances);

// Directory layout: catalog.tsv, train.tsv, val.tsv, test.tsv, pop.tsv.
void save_split(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit load_split(const std::filesystem::path& dir);

}  // namespace napo
