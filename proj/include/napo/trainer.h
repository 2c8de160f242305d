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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "napo/aux_rec.h"
#include "napo/data.h"
#include "napo/margin.h"
#include "napo/optimizer.h"
#include "napo/policy.h"
#include "napo/sharing.h"

namespace napo {

enum class LossKind { kSft, kDpo, kSimpo, kSdpo, kNapo };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view s);

struct TrainConfig {
  LossKind loss_kind = LossKind::kNapo;
  size_t n_neg = 3;
  double rho = 0.7;
  double gamma0 = 1.0;
  double alpha = 0.3;
  double momentum = 0.9;
  double beta = 1.0;
  bool length_normalize = false;
  GradientLinkage gradient_linkage = GradientLinkage::kFlowThrough;
  size_t batch_size = 32;
  size_t epochs = 3;
  double lr = 1e-3;
  OptimizerKind optimizer_kind = OptimizerKind::kAdam;
  uint64_t rng_seed = 0;
  size_t candidate_size = 20;
  size_t policy_dim = 32;        // width of a freshly initialized policy
  double grad_clip = 5.0;        // global L2 norm
  bool reset_margin_each_epoch = false;

  // dpo and sdpo score against a frozen reference policy.
  bool uses_reference() const {
    return loss_kind == LossKind::kDpo || loss_kind == LossKind::kSdpo;
  }
  // dpo and simpo compare against a single negative.
  bool pairwise() const { return loss_kind == LossKind::kDpo || loss_kind == LossKind::kSimpo; }
  size_t negatives_per_instance() const { return pairwise() ? 1 : n_neg; }
  bool shares_negatives() const {
    return (loss_kind == LossKind::kNapo || loss_kind == LossKind::kSdpo) && rho > 0;
  }
  bool needs_aux() const {
    return shares_negatives() || (loss_kind == LossKind::kNapo && alpha > 0);
  }

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
// Overlays the keys of `j` onto `base`. Unknown keys are a UsageError.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct BatchRecord {
  size_t epoch = 0;
  int64_t step = 0;
  size_t batch_size = 0;
  double loss = 0.0;
  OpCounters counters;
  OpCounters ref_counters;
  double effective_negatives_mean = 0.0;
  size_t collisions_filtered = 0;
  std::optional<double> batch_mean_conf;
  std::optional<double> gamma;
  std::optional<double> r0;
  double grad_norm = 0.0;
  std::vector<double> instance_losses;  // not serialized
};

struct TrainReport {
  std::vector<double> epoch_mean_loss;
  std::vector<BatchRecord> batches;
  std::vector<std::string> checkpoint_paths;

  // One JSON object per line: a "batch" record per batch and an "epoch"
  // record after each epoch.
  std::string to_jsonl() const;
};

struct TrainResult {
  PolicyParams params;
  TrainReport report;
};

// Maximum-likelihood training on the positives.
// One batch's mean loss; accumulates d(loss)/d(params) into grads when given.
// margin is advanced in place for napo with an auxiliary model.
struct BatchEvaluation {
  double loss = 0.0;
  std::vector<double> instance_losses;
  OpCounters counters;
  OpCounters ref_counters;
  AssembleStats sharing;
  std::optional<double> batch_mean_conf;
  std::optional<double> gamma;
};

BatchEvaluation evaluate_sft_batch(const Catalog& catalog, std::span<const TrainingInstance> batch,
                                   const PolicyParams& params, GradientBuffer* grads);

BatchEvaluation evaluate_preference_batch(const TrainConfig& config, const Catalog& catalog,
                                          std::span<const TrainingInstance> batch,
                                          const PolicyParams& params, const AuxParams* aux,
                                          const PolicyParams* reference, MarginState* margin,
                                          GradientBuffer* grads);

TrainResult train_sft(const TrainConfig& config, const DatasetSplit& split, PolicyParams init);

// Preference training starting from `init`. For dpo/sdpo the reference is
// `reference` when given, else a frozen copy of `init`. `aux` is required
// when config.needs_aux().
TrainResult train_preference(const TrainConfig& config, const DatasetSplit& split,
                             const PolicyParams& init, const AuxParams* aux,
                             const PolicyParams* reference = nullptr);

// Negatives the trainer uses for each training instance.
std::vector<TrainingInstance> prepare_instances(const TrainConfig& config,
                                                const DatasetSplit& split);

struct GridRow {
  std::string name;
  TrainConfig config;
};

// The ablation grid: S-DPO, SimS-DPO, S-DPO + NS, NAPO and its variants.
std::vector<GridRow> ablation_grid(const TrainConfig& base);

}  // namespace napo
