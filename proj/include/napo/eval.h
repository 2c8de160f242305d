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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "napo/aux_rec.h"
#include "napo/data.h"
#include "napo/policy.h"

namespace napo {

// Scores for inst.candidates, in the same order.
using CandidateScoreFn = std::function<std::vector<double>(const TrainingInstance& inst)>;
// Greedy response tokens for an instance, EOS excluded.
using DecodeFn = std::function<std::vector<TokenId>(const TrainingInstance& inst)>;

// One F call per instance and one G call per candidate.
std::vector<double> policy_candidate_scores(const PolicyParams& params, const Catalog& catalog,
                                            const TrainingInstance& inst,
                                            OpCounters* counters = nullptr);
std::vector<double> aux_candidate_scores(const AuxParams& aux, const TrainingInstance& inst);

// First maximum over candidates in ascending id order, so ties go to the lowest id.
ItemId top1(std::span<const ItemId> candidates, std::span<const double> scores);

double hit_ratio_at_1(std::span<const TrainingInstance> instances, const CandidateScoreFn& score);

double valid_ratio(std::span<const TrainingInstance> instances, const Catalog& catalog,
                   const DecodeFn& decode);
double valid_ratio(const PolicyParams& params, const Catalog& catalog,
                   std::span<const TrainingInstance> instances);

double log_pop(std::span<const int64_t> pop_counts, ItemId item);
double bias_pop(std::span<const int64_t> pop_counts, std::span<const ItemId> history,
                ItemId recommended);
// Mean of bias_pop over instances; recommended[i] pairs with instances[i].
double pop_bias(std::span<const int64_t> pop_counts, std::span<const TrainingInstance> instances,
                std::span<const ItemId> recommended);

struct EvalReport {
  double hit_ratio_1 = 0.0;
  double valid_ratio = 0.0;
  double pop_bias_expectation = 0.0;
  size_t n_instances = 0;
  OpCounters counters;
};

EvalReport evaluate_policy(const PolicyParams& params, const DatasetSplit& split,
                           std::span<const TrainingInstance> instances);
EvalReport evaluate_aux(const AuxParams& aux, const DatasetSplit& split,
                        std::span<const TrainingInstance> instances);

// Percent change per metric; negative pop_bias means stronger debiasing.
struct RelativeImprovement {
  double hit_ratio_1 = 0.0;
  double valid_ratio = 0.0;
  double pop_bias_expectation = 0.0;
};

RelativeImprovement relative_improvement(const EvalReport& method, const EvalReport& baseline);

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RelativeImprovement& rel);

struct NamedReport {
  std::string name;
  EvalReport report;
};

std::string format_table(std::span<const NamedReport> rows);

}  // namespace napo
