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

#include "napo/trainer.h"

#include <cmath>
#include <sstream>
#include <string>

#include "napo/errors.h"
#include "napo/losses.h"

namespace napo {
namespace {

constexpr uint64_t kTagTrainNegatives = 0x74726e67;  // "trng"

std::string batch_dump(std::span<const TrainingInstance> batch, int64_t step) {
  nlohmann::json dump;
  dump["step"] = step;
  for (const auto& inst : batch) {
    dump["instances"].push_back({{"user_id", inst.user_id},
                                 {"context", inst.prompt_context},
                                 {"positive", inst.positive},
                                 {"negatives", inst.sampled_negatives}});
  }
  return dump.dump();
}

void apply_update(PolicyParams& params, GradientBuffer& grads, Optimizer& opt, double clip,
                  BatchRecord& rec, std::span<const TrainingInstance> batch) {
  if (!grads.all_finite()) {
    throw NumericalError("non-finite gradient; batch: " + batch_dump(batch, rec.step));
  }
  auto gs = grads.tensors();
  rec.grad_norm = clip > 0 ? clip_global_norm(gs, clip) : std::sqrt(grads.squared_norm());
  auto ps = params.tensors();
  std::array<const Tensor*, 4> cgs = {gs[0], gs[1], gs[2], gs[3]};
  opt.step(ps, cgs);
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kSft: return "sft";
    case LossKind::kDpo: return "dpo";
    case LossKind::kSimpo: return "simpo";
    case LossKind::kSdpo: return "sdpo";
    case LossKind::kNapo: return "napo";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view s) {
  if (s == "sft") return LossKind::kSft;
  if (s == "dpo") return LossKind::kDpo;
  if (s == "simpo") return LossKind::kSimpo;
  if (s == "sdpo") return LossKind::kSdpo;
  if (s == "napo") return LossKind::kNapo;
  throw UsageError("unknown loss '" + std::string(s) + "' (expected sft|dpo|simpo|sdpo|napo)");
}

void TrainConfig::validate() const {
  if (n_neg < 1) throw UsageError("n_neg must be >= 1");
  if (!(rho >= 0 && rho <= 1)) throw UsageError("rho must be in [0, 1]");
  if (!(gamma0 >= 0)) throw UsageError("gamma0 must be >= 0");
  if (!(alpha >= 0)) throw UsageError("alpha must be >= 0");
  if (!(momentum >= 0 && momentum < 1)) throw UsageError("momentum must be in [0, 1)");
  if (!(beta > 0)) throw UsageError("beta must be > 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(lr > 0)) throw UsageError("lr must be > 0");
  if (candidate_size < 1) throw UsageError("candidate_size must be >= 1");
  if (policy_dim < 1) throw UsageError("policy_dim must be >= 1");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"loss_kind", to_string(c.loss_kind)},
          {"n_neg", c.n_neg},
          {"rho", c.rho},
          {"gamma0", c.gamma0},
          {"alpha", c.alpha},
          {"momentum", c.momentum},
          {"beta", c.beta},
          {"length_normalize", c.length_normalize},
          {"gradient_linkage", to_string(c.gradient_linkage)},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"optimizer_kind", to_string(c.optimizer_kind)},
          {"rng_seed", c.rng_seed},
          {"candidate_size", c.candidate_size},
          {"policy_dim", c.policy_dim},
          {"grad_clip", c.grad_clip},
          {"reset_margin_each_epoch", c.reset_margin_each_epoch}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw UsageError("config must be a flat JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "loss_kind") c.loss_kind = parse_loss_kind(v.get<std::string>());
      else if (key == "n_neg") c.n_neg = v.get<size_t>();
      else if (key == "rho") c.rho = v.get<double>();
      else if (key == "gamma0") c.gamma0 = v.get<double>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "momentum") c.momentum = v.get<double>();
      else if (key == "beta") c.beta = v.get<double>();
      else if (key == "length_normalize") c.length_normalize = v.get<bool>();
      else if (key == "gradient_linkage")
        c.gradient_linkage = parse_gradient_linkage(v.get<std::string>());
      else if (key == "batch_size") c.batch_size = v.get<size_t>();
      else if (key == "epochs") c.epochs = v.get<size_t>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "optimizer_kind") c.optimizer_kind = parse_optimizer_kind(v.get<std::string>());
      else if (key == "rng_seed") c.rng_seed = v.get<uint64_t>();
      else if (key == "candidate_size") c.candidate_size = v.get<size_t>();
      else if (key == "policy_dim") c.policy_dim = v.get<size_t>();
      else if (key == "grad_clip") c.grad_clip = v.get<double>();
      else if (key == "reset_margin_each_epoch") c.reset_margin_each_epoch = v.get<bool>();
      else throw UsageError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
  return c;
}

std::string TrainReport::to_jsonl() const {
  std::ostringstream out;
  size_t next = 0;
  for (size_t epoch = 0; epoch < epoch_mean_loss.size(); ++epoch) {
    for (; next < batches.size() && batches[next].epoch == epoch; ++next) {
      const BatchRecord& b = batches[next];
      nlohmann::json j = {{"kind", "batch"},
                          {"epoch", b.epoch},
                          {"step", b.step},
                          {"batch_size", b.batch_size},
                          {"loss", b.loss},
                          {"f_calls", b.counters.f_calls},
                          {"g_calls", b.counters.g_calls},
                          {"ref_f_calls", b.ref_counters.f_calls},
                          {"ref_g_calls", b.ref_counters.g_calls},
                          {"effective_negatives_mean", b.effective_negatives_mean},
                          {"collisions_filtered", b.collisions_filtered},
                          {"grad_norm", b.grad_norm}};
      if (b.batch_mean_conf) j["batch_mean_conf"] = *b.batch_mean_conf;
      if (b.gamma) j["gamma"] = *b.gamma;
      if (b.r0) j["r0"] = *b.r0;
      out << j.dump() << '\n';
    }
    out << nlohmann::json{{"kind", "epoch"}, {"epoch", epoch}, {"mean_loss", epoch_mean_loss[epoch]}}
               .dump()
        << '\n';
  }
  return out.str();
}

std::vector<TrainingInstance> prepare_instances(const TrainConfig& config,
                                                const DatasetSplit& split) {
  const size_t n = config.negatives_per_instance();
  std::vector<TrainingInstance> out = split.train;
  for (size_t k = 0; k < out.size(); ++k) {
    auto& inst = out[k];
    if (inst.sampled_negatives.size() >= n) {
      inst.sampled_negatives.resize(n);
    } else {
      inst.sampled_negatives =
          sample_negatives(split.catalog.size(), inst.prompt_context, inst.positive, n,
                           derive_seed(config.rng_seed, kTagTrainNegatives, k));
    }
  }
  return out;
}

BatchEvaluation evaluate_sft_batch(const Catalog& catalog, std::span<const TrainingInstance> batch,
                                   const PolicyParams& params, GradientBuffer* grads) {
  if (batch.empty()) throw DataError("empty batch");
  ForwardPass pass(params, grads != nullptr);
  BatchEvaluation ev;
  std::vector<double> upstream;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss_sum = 0.0;
  for (const auto& inst : batch) {
    const size_t ctx = pass.encode_context(catalog.prompt_tokens(inst.prompt_context));
    const size_t s = pass.score_response(ctx, catalog.response_tokens(inst.positive));
    const LossResult l = sft_loss(pass.score(s));
    loss_sum += l.value;
    ev.instance_losses.push_back(l.value);
    upstream.push_back(l.d_positive * inv_b);
  }
  ev.loss = loss_sum * inv_b;
  ev.counters = pass.counters();
  if (grads != nullptr) pass.backward_all(upstream, *grads);
  return ev;
}

BatchEvaluation evaluate_preference_batch(const TrainConfig& config, const Catalog& catalog,
                                          std::span<const TrainingInstance> batch,
                                          const PolicyParams& params, const AuxParams* aux,
                                          const PolicyParams* reference, MarginState* margin,
                                          GradientBuffer* grads) {
  if (batch.empty()) throw DataError("empty batch");
  if (config.uses_reference() && reference == nullptr) {
    throw UsageError("loss '" + std::string(to_string(config.loss_kind)) +
                     "' needs a reference policy");
  }
  if (config.shares_negatives() && aux == nullptr) {
    throw UsageError("negative sharing needs an auxiliary recommender");
  }
  const size_t b = batch.size();
  BatchEvaluation ev;

  // F once per prompt; G once per own response.
  ForwardPass pass(params, grads != nullptr);
  const BatchScores handles = score_batch(pass, catalog, batch);
  if (config.uses_reference()) {
    ForwardPass ref_pass(*reference, false);
    const BatchScores ref_handles = score_batch(ref_pass, catalog, batch);
    for (size_t u = 0; u < b; ++u) {
      pass.attach_reference(handles.positives[u], ref_pass.score(ref_handles.positives[u]).h);
      for (size_t j = 0; j < handles.negatives[u].size(); ++j) {
        pass.attach_reference(handles.negatives[u][j],
                              ref_pass.score(ref_handles.negatives[u][j]).h);
      }
    }
    ev.ref_counters = ref_pass.counters();
  }
  ev.counters = pass.counters();

  std::vector<std::vector<ItemId>> sequences;
  for (const auto& inst : batch) sequences.push_back(inst.prompt_context);
  std::vector<std::vector<size_t>> partners(b);
  if (config.shares_negatives()) partners = select_share_partners(*aux, sequences, config.rho);
  const auto sets = assemble_hybrid_sets(own_negatives(pass, handles, batch), partners,
                                         config.gradient_linkage, &ev.sharing);

  double gamma = 0.0;
  if (config.loss_kind == LossKind::kSimpo) gamma = config.gamma0;
  if (config.loss_kind == LossKind::kNapo) {
    if (aux != nullptr && margin != nullptr) {
      const double conf = batch_mean_confidence(*aux, sequences, sets);
      auto [g, next] = batch_gamma(*margin, conf);
      *margin = next;
      gamma = g;
      ev.batch_mean_conf = conf;
    } else if (config.alpha > 0) {
      throw UsageError("a dynamic margin needs an auxiliary recommender and margin state");
    } else {
      // alpha == 0: the margin is gamma0 whatever the confidence.
      gamma = config.gamma0;
    }
    ev.gamma = gamma;
  }

  std::vector<double> upstream(pass.num_scores(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(b);
  double loss_sum = 0.0;
  for (size_t u = 0; u < b; ++u) {
    const PolicyScore& pos = pass.score(handles.positives[u]);
    const auto entries = sets[u].entries();
    if (entries.empty()) throw DataError("instance has no negatives");
    LossResult l;
    switch (config.loss_kind) {
      case LossKind::kDpo:
        l = dpo_loss(pos, entries[0]->score);
        break;
      case LossKind::kSimpo:
        l = simpo_loss(pos, entries[0]->score, gamma, config.length_normalize);
        break;
      case LossKind::kSdpo: {
        const auto negs = sets[u].scores();
        l = sdpo_loss(pos, negs, true);
        break;
      }
      case LossKind::kNapo:
        l = napo_loss(pos, sets[u], gamma, config.length_normalize);
        break;
      case LossKind::kSft:
        throw UsageError("sft is not a preference loss");
    }
    loss_sum += l.value;
    ev.instance_losses.push_back(l.value);
    upstream[handles.positives[u]] += l.d_positive * inv_b;
    // Pairwise losses only see entries[0].
    for (size_t e = 0; e < l.d_negatives.size(); ++e) {
      const NegativeEntry& entry = *entries[e];
      if (entry.gradient_linkage == GradientLinkage::kDetached) continue;
      upstream[handles.negatives[entry.origin_index][entry.slot]] += l.d_negatives[e] * inv_b;
    }
  }
  ev.loss = loss_sum * inv_b;
  if (grads != nullptr && std::isfinite(ev.loss)) pass.backward_all(upstream, *grads);
  return ev;
}

namespace {

// Shared epoch loop; step_fn evaluates one batch into grads.
template <typename StepFn>
TrainReport run_epochs(const TrainConfig& config, std::span<const TrainingInstance> instances,
                       PolicyParams& params, StepFn&& step_fn, MarginState* margin) {
  TrainReport report;
  Optimizer opt(OptimizerConfig{config.optimizer_kind, config.lr});
  GradientBuffer grads(params);
  int64_t step = 0;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (margin != nullptr && config.reset_margin_each_epoch) {
      *margin = MarginState::create(config.gamma0, config.alpha, config.momentum);
    }
    double epoch_sum = 0.0;
    for (const auto& idx :
         make_batches(instances.size(), config.batch_size, config.rng_seed, epoch)) {
      std::vector<TrainingInstance> batch;
      batch.reserve(idx.size());
      for (size_t i : idx) batch.push_back(instances[i]);
      grads.zero();
      BatchEvaluation ev = step_fn(std::span<const TrainingInstance>(batch), grads);
      BatchRecord rec;
      rec.epoch = epoch;
      rec.step = step++;
      rec.batch_size = batch.size();
      rec.loss = ev.loss;
      rec.counters = ev.counters;
      rec.ref_counters = ev.ref_counters;
      rec.effective_negatives_mean = ev.sharing.effective_negatives_mean;
      rec.collisions_filtered = ev.sharing.collisions_filtered;
      rec.batch_mean_conf = ev.batch_mean_conf;
      rec.gamma = ev.gamma;
      if (ev.batch_mean_conf && margin != nullptr) rec.r0 = margin->r0;
      rec.instance_losses = std::move(ev.instance_losses);
      if (!std::isfinite(rec.loss)) {
        throw NumericalError("non-finite loss; batch: " + batch_dump(batch, rec.step));
      }
      apply_update(params, grads, opt, config.grad_clip, rec, batch);
      epoch_sum += rec.loss * static_cast<double>(batch.size());
      report.batches.push_back(std::move(rec));
    }
    report.epoch_mean_loss.push_back(epoch_sum / static_cast<double>(instances.size()));
  }
  return report;
}

}  // namespace

TrainResult train_sft(const TrainConfig& config, const DatasetSplit& split, PolicyParams init) {
  config.validate();
  if (split.train.empty()) throw DataError("empty training split");
  TrainResult result{std::move(init), {}};
  const PolicyParams& params = result.params;
  result.report = run_epochs(
      config, split.train, result.params,
      [&](std::span<const TrainingInstance> batch, GradientBuffer& grads) {
        return evaluate_sft_batch(split.catalog, batch, params, &grads);
      },
      nullptr);
  return result;
}

TrainResult train_preference(const TrainConfig& config, const DatasetSplit& split,
                             const PolicyParams& init, const AuxParams* aux,
                             const PolicyParams* reference) {
  config.validate();
  if (config.loss_kind == LossKind::kSft) throw UsageError("use train_sft for loss 'sft'");
  if (split.train.empty()) throw DataError("empty training split");
  if (config.needs_aux() && aux == nullptr) {
    throw UsageError("loss '" + std::string(to_string(config.loss_kind)) +
                     "' with these settings needs an auxiliary recommender checkpoint");
  }
  const std::vector<TrainingInstance> instances = prepare_instances(config, split);

  TrainResult result{init, {}};
  result.params.beta = config.beta;
  PolicyParams frozen_ref = reference ? *reference : init;
  frozen_ref.beta = config.beta;
  MarginState margin = MarginState::create(config.gamma0, config.alpha, config.momentum);
  const PolicyParams& params = result.params;
  result.report = run_epochs(
      config, instances, result.params,
      [&](std::span<const TrainingInstance> batch, GradientBuffer& grads) {
        return evaluate_preference_batch(config, split.catalog, batch, params, aux, &frozen_ref,
                                         &margin, &grads);
      },
      &margin);
  return result;
}

std::vector<GridRow> ablation_grid(const TrainConfig& base) {
  auto with = [&](LossKind kind, double rho, double gamma0, double alpha, bool length_norm) {
    TrainConfig c = base;
    c.loss_kind = kind;
    c.rho = rho;
    c.gamma0 = gamma0;
    c.alpha = alpha;
    c.length_normalize = length_norm;
    return c;
  };
  const double rho = base.rho;
  const double g0 = base.gamma0;
  const double a = base.alpha;
  return {
      {"S-DPO", with(LossKind::kSdpo, 0.0, 0.0, 0.0, false)},
      {"SimS-DPO", with(LossKind::kNapo, 0.0, 0.0, 0.0, false)},
      {"S-DPO + NS", with(LossKind::kSdpo, rho, 0.0, 0.0, false)},
      {"NAPO", with(LossKind::kNapo, rho, g0, a, false)},
      {"w/ Length Norm", with(LossKind::kNapo, rho, g0, a, true)},
      {"w/o NS", with(LossKind::kNapo, 0.0, g0, a, false)},
      {"w/o Dynamic gamma", with(LossKind::kNapo, rho, g0, 0.0, false)},
      {"w/o NS & gamma", with(LossKind::kNapo, 0.0, 0.0, 0.0, false)},
      {"w/o NS & Dynamic gamma", with(LossKind::kNapo, 0.0, g0, 0.0, false)},
  };
}

}  // namespace napo
