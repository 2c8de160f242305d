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

#include "napo/eval.h"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "napo/errors.h"

namespace napo {

std::vector<double> policy_candidate_scores(const PolicyParams& params, const Catalog& catalog,
                                            const TrainingInstance& inst, OpCounters* counters) {
  if (inst.candidates.empty()) throw DataError("instance has an empty candidate set");
  const ContextState state =
      encode_context(params, catalog.prompt_tokens(inst.prompt_context), counters);
  std::vector<double> out;
  out.reserve(inst.candidates.size());
  for (ItemId c : inst.candidates) {
    out.push_back(score_response(params, state, catalog.response_tokens(c), counters).h);
  }
  return out;
}

std::vector<double> aux_candidate_scores(const AuxParams& aux, const TrainingInstance& inst) {
  if (inst.candidates.empty()) throw DataError("instance has an empty candidate set");
  const SeqEmbedding emb = sr_emb(aux, inst.prompt_context);
  std::vector<double> out;
  out.reserve(inst.candidates.size());
  for (ItemId c : inst.candidates) out.push_back(sr_score(aux, emb, c));
  return out;
}

ItemId top1(std::span<const ItemId> candidates, std::span<const double> scores) {
  if (candidates.empty() || candidates.size() != scores.size()) {
    throw DataError("candidate/score size mismatch");
  }
  size_t best = 0;
  for (size_t i = 1; i < candidates.size(); ++i) {
    if (scores[i] > scores[best] ||
        (scores[i] == scores[best] && candidates[i] < candidates[best])) {
      best = i;
    }
  }
  return candidates[best];
}

double hit_ratio_at_1(std::span<const TrainingInstance> instances, const CandidateScoreFn& score) {
  if (instances.empty()) throw DataError("no instances to evaluate");
  size_t hits = 0;
  for (const auto& inst : instances) {
    const std::vector<double> s = score(inst);
    if (top1(inst.candidates, s) == inst.positive) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(instances.size());
}

double valid_ratio(std::span<const TrainingInstance> instances, const Catalog& catalog,
                   const DecodeFn& decode) {
  if (instances.empty()) throw DataError("no instances to evaluate");
  size_t valid = 0;
  for (const auto& inst : instances) {
    const std::vector<TokenId> tokens = decode(inst);
    for (ItemId c : inst.candidates) {
      if (catalog.item(c).title_tokens == tokens) {
        ++valid;
        break;
      }
    }
  }
  return static_cast<double>(valid) / static_cast<double>(instances.size());
}

double valid_ratio(const PolicyParams& params, const Catalog& catalog,
                   std::span<const TrainingInstance> instances) {
  // A single-token response is always some item.
  if (catalog.mode() == ResponseMode::kSingleToken) return 1.0;
  size_t max_title = 0;
  for (const auto& item : catalog.items()) max_title = std::max(max_title, item.title_tokens.size());
  return valid_ratio(instances, catalog, [&](const TrainingInstance& inst) {
    const ContextState state = encode_context(params, catalog.prompt_tokens(inst.prompt_context));
    return greedy_decode(params, state, max_title + 1, catalog.eos_token());
  });
}

double log_pop(std::span<const int64_t> pop_counts, ItemId item) {
  if (item < 0 || static_cast<size_t>(item) >= pop_counts.size()) {
    throw DataError("item " + std::to_string(item) + " outside popularity table");
  }
  return std::log1p(static_cast<double>(pop_counts[static_cast<size_t>(item)]));
}

double bias_pop(std::span<const int64_t> pop_counts, std::span<const ItemId> history,
                ItemId recommended) {
  if (history.empty()) throw DataError("bias_pop needs a non-empty history");
  double sum = 0.0;
  for (ItemId h : history) sum += log_pop(pop_counts, h);
  return log_pop(pop_counts, recommended) - sum / static_cast<double>(history.size());
}

double pop_bias(std::span<const int64_t> pop_counts, std::span<const TrainingInstance> instances,
                std::span<const ItemId> recommended) {
  if (instances.empty() || instances.size() != recommended.size()) {
    throw DataError("pop_bias needs one recommendation per instance");
  }
  double sum = 0.0;
  for (size_t i = 0; i < instances.size(); ++i) {
    sum += bias_pop(pop_counts, instances[i].prompt_context, recommended[i]);
  }
  return sum / static_cast<double>(instances.size());
}

namespace {

EvalReport evaluate_with(const DatasetSplit& split, std::span<const TrainingInstance> instances,
                         const CandidateScoreFn& score, double valid) {
  if (instances.empty()) throw DataError("no instances to evaluate");
  EvalReport report;
  report.n_instances = instances.size();
  std::vector<ItemId> recommended;
  size_t hits = 0;
  for (const auto& inst : instances) {
    const std::vector<double> s = score(inst);
    const ItemId best = top1(inst.candidates, s);
    if (best == inst.positive) ++hits;
    recommended.push_back(best);
  }
  report.hit_ratio_1 = static_cast<double>(hits) / static_cast<double>(instances.size());
  report.valid_ratio = valid;
  report.pop_bias_expectation = pop_bias(split.pop_counts, instances, recommended);
  return report;
}

double percent_change(double x, double base, const char* metric) {
  if (base == 0.0) {
    throw DataError(std::string("baseline ") + metric + " is zero; relative change undefined");
  }
  return 100.0 * (x - base) / std::abs(base);
}

}  // namespace

EvalReport evaluate_policy(const PolicyParams& params, const DatasetSplit& split,
                           std::span<const TrainingInstance> instances) {
  OpCounters counters;
  EvalReport report = evaluate_with(
      split, instances,
      [&](const TrainingInstance& inst) {
        return policy_candidate_scores(params, split.catalog, inst, &counters);
      },
      valid_ratio(params, split.catalog, instances));
  report.counters = counters;
  return report;
}

EvalReport evaluate_aux(const AuxParams& aux, const DatasetSplit& split,
                        std::span<const TrainingInstance> instances) {
  return evaluate_with(
      split, instances, [&](const TrainingInstance& inst) { return aux_candidate_scores(aux, inst); },
      1.0);
}

RelativeImprovement relative_improvement(const EvalReport& method, const EvalReport& baseline) {
  if (method.n_instances != baseline.n_instances) {
    throw DataError("reports cover different instance counts");
  }
  return {percent_change(method.hit_ratio_1, baseline.hit_ratio_1, "hit_ratio_1"),
          percent_change(method.valid_ratio, baseline.valid_ratio, "valid_ratio"),
          percent_change(method.pop_bias_expectation, baseline.pop_bias_expectation,
                         "pop_bias_expectation")};
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"hit_ratio_1", r.hit_ratio_1},
          {"valid_ratio", r.valid_ratio},
          {"pop_bias_expectation", r.pop_bias_expectation},
          {"n_instances", r.n_instances},
          {"f_calls", r.counters.f_calls},
          {"g_calls", r.counters.g_calls}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.hit_ratio_1 = j.at("hit_ratio_1").get<double>();
    r.valid_ratio = j.at("valid_ratio").get<double>();
    r.pop_bias_expectation = j.at("pop_bias_expectation").get<double>();
    r.n_instances = j.at("n_instances").get<size_t>();
    r.counters.f_calls = j.value("f_calls", int64_t{0});
    r.counters.g_calls = j.value("g_calls", int64_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed eval report: ") + e.what());
  }
}

nlohmann::json to_json(const RelativeImprovement& rel) {
  return {{"hit_ratio_1_pct", rel.hit_ratio_1},
          {"valid_ratio_pct", rel.valid_ratio},
          {"pop_bias_expectation_pct", rel.pop_bias_expectation}};
}

std::string format_table(std::span<const NamedReport> rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %12s %12s %12s %8s\n", "method", "HitRatio@1",
                "ValidRatio", "PopBias", "n");
  out << line;
  for (const auto& row : rows) {
    std::snprintf(line, sizeof line, "%-24s %12.4f %12.4f %12.4f %8zu\n", row.name.c_str(),
                  row.report.hit_ratio_1, row.report.valid_ratio,
                  row.report.pop_bias_expectation, row.report.n_instances);
    out << line;
  }
  return out.str();
}

}  // namespace napo
