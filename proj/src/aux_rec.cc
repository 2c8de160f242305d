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

#include "napo/aux_rec.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "napo/errors.h"
#include "napo/numeric.h"
#include "napo/optimizer.h"

namespace napo {
namespace {

constexpr uint64_t kTagAuxNegatives = 0x61756e67;  // "aung"
constexpr uint64_t kTagAuxOrder = 0x61756f72;      // "auor"

struct EncoderForward {
  std::vector<double> pooled;
  std::vector<double> q;  // tanh output, before normalization
  double norm = 0.0;
  std::vector<double> unit;
};

EncoderForward forward_encoder(const AuxParams& p, std::span<const ItemId> sequence) {
  if (sequence.empty()) throw DataError("empty sequence");
  EncoderForward f;
  f.pooled.assign(p.dim, 0.0);
  const double w = 1.0 / static_cast<double>(sequence.size());
  for (ItemId i : sequence) {
    if (i < 0 || size_t(i) >= p.n_items) {
      throw DataError("item " + std::to_string(i) + " unknown to the auxiliary model");
    }
    axpy(w, p.item_embeddings.row(i), f.pooled);
  }
  f.q.resize(p.dim);
  for (size_t k = 0; k < p.dim; ++k) {
    f.q[k] = std::tanh(dot(p.encoder_weight.row(k), f.pooled) + p.encoder_bias[k]);
  }
  f.norm = std::sqrt(dot(f.q, f.q));
  if (!(f.norm > 0)) throw NumericalError("sequence embedding has zero norm");
  f.unit = f.q;
  for (double& v : f.unit) v /= f.norm;
  return f;
}

// d/dx of x/|x| applied to upstream g: (g - u (u.g)) / |x|
void normalize_backward(std::span<const double> unit, double norm, std::span<const double> g,
                        std::span<double> out) {
  const double ug = dot(unit, g);
  for (size_t k = 0; k < unit.size(); ++k) out[k] = (g[k] - unit[k] * ug) / norm;
}

}  // namespace

AuxParams AuxParams::zeros(size_t n_items, size_t dim) {
  if (n_items < 1 || dim < 1) throw UsageError("aux model needs n_items >= 1 and dim >= 1");
  AuxParams p;
  p.n_items = n_items;
  p.dim = dim;
  p.item_embeddings = Tensor::zeros({n_items, dim});
  p.encoder_weight = Tensor::zeros({dim, dim});
  p.encoder_bias = Tensor::zeros({dim});
  return p;
}

AuxParams AuxParams::init(size_t n_items, size_t dim, uint64_t seed) {
  AuxParams p = zeros(n_items, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (double& v : p.item_embeddings.values) v = normal(rng);
  for (size_t k = 0; k < dim; ++k) p.encoder_weight(k, k) = 1.0;
  for (double& v : p.encoder_weight.values) v += 0.1 * normal(rng);
  return p;
}

Checkpoint AuxParams::to_checkpoint() const {
  Checkpoint c;
  c.meta = {{"kind", "aux"}, {"n_items", std::to_string(n_items)}, {"dim", std::to_string(dim)}};
  auto ts = tensors();
  for (size_t i = 0; i < ts.size(); ++i) c.tensors.emplace_back(kTensorNames[i], *ts[i]);
  return c;
}

AuxParams AuxParams::from_checkpoint(const Checkpoint& c) {
  if (c.meta_value("kind") != "aux") throw DataError("checkpoint is not an aux model");
  AuxParams p = zeros(std::stoul(c.meta_value("n_items")), std::stoul(c.meta_value("dim")));
  auto ts = p.tensors();
  for (size_t i = 0; i < ts.size(); ++i) {
    const Tensor& t = c.tensor(kTensorNames[i]);
    if (t.shape != ts[i]->shape) {
      throw DataError("tensor '" + std::string(kTensorNames[i]) + "' has the wrong shape");
    }
    *ts[i] = t;
  }
  return p;
}

SeqEmbedding sr_emb(const AuxParams& params, std::span<const ItemId> sequence) {
  return forward_encoder(params, sequence).unit;
}

double sr_score(const AuxParams& params, const SeqEmbedding& embedding, ItemId item) {
  if (item < 0 || size_t(item) >= params.n_items) {
    throw DataError("item " + std::to_string(item) + " unknown to the auxiliary model");
  }
  const auto e = params.item_embeddings.row(item);
  const double norm = std::sqrt(dot(e, e));
  if (!(norm > 0)) throw NumericalError("item embedding has zero norm");
  return std::clamp(dot(embedding, e) / norm, -1.0, 1.0);
}

double sr_score(const AuxParams& params, std::span<const ItemId> sequence, ItemId item) {
  return sr_score(params, sr_emb(params, sequence), item);
}

double similarity(const AuxParams& params, std::span<const ItemId> seq_u,
                  std::span<const ItemId> seq_v) {
  return dot(sr_emb(params, seq_u), sr_emb(params, seq_v));
}

std::vector<std::vector<double>> similarity_matrix(const std::vector<SeqEmbedding>& embeddings) {
  const size_t n = embeddings.size();
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 0.0));
  for (size_t u = 0; u < n; ++u) {
    sim[u][u] = dot(embeddings[u], embeddings[u]);
    for (size_t v = u + 1; v < n; ++v) sim[u][v] = sim[v][u] = dot(embeddings[u], embeddings[v]);
  }
  return sim;
}

AuxTrainResult train_aux(const DatasetSplit& split, const AuxTrainConfig& config) {
  const size_t n_items = split.catalog.size();
  if (split.train.empty()) throw DataError("aux training needs a non-empty training split");
  if (n_items < 2) throw DataError("aux training needs at least two items");
  if (config.batch_size < 1) throw UsageError("aux batch_size must be >= 1");

  struct Example {
    size_t instance;
    size_t length;  // prefix length of context + positive used as input
  };
  std::vector<Example> examples;
  std::vector<std::vector<ItemId>> sequences;
  for (size_t k = 0; k < split.train.size(); ++k) {
    auto seq = split.train[k].prompt_context;
    seq.push_back(split.train[k].positive);
    for (size_t len = 1; len < seq.size(); ++len) examples.push_back({k, len});
    sequences.push_back(std::move(seq));
  }

  AuxTrainResult result{AuxParams::init(n_items, config.dim, config.seed), {}};
  AuxParams& p = result.params;
  AuxParams grads = AuxParams::zeros(n_items, config.dim);
  Optimizer opt(OptimizerConfig{OptimizerKind::kAdam, config.lr});
  const size_t n_neg = std::min(config.n_negatives, n_items - 1);
  const double tau = config.temperature;
  const size_t d = config.dim;

  std::vector<double> logits(n_neg + 1);
  std::vector<double> probs(n_neg + 1);
  std::vector<std::vector<double>> unit_items(n_neg + 1, std::vector<double>(d));
  std::vector<double> item_norms(n_neg + 1);
  std::vector<double> d_unit(d), d_q(d), d_pre(d), d_pooled(d), d_unit_item(d), d_item(d);

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(config.seed, kTagAuxOrder, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      for (Tensor* g : grads.tensors()) g->fill(0.0);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      for (size_t b = start; b < end; ++b) {
        const Example& ex = examples[order[b]];
        const auto& seq = sequences[ex.instance];
        std::span<const ItemId> input(seq.data(), ex.length);
        const ItemId target = seq[ex.length];
        auto negs = sample_negatives(n_items, {}, target, n_neg,
                                     derive_seed(config.seed, kTagAuxNegatives,
                                                 epoch * examples.size() + order[b]));
        negs.insert(negs.begin(), target);

        const auto f = forward_encoder(p, input);
        for (size_t j = 0; j <= n_neg; ++j) {
          const auto e = p.item_embeddings.row(negs[j]);
          item_norms[j] = std::sqrt(dot(e, e));
          for (size_t k = 0; k < d; ++k) unit_items[j][k] = e[k] / item_norms[j];
          logits[j] = tau * dot(f.unit, unit_items[j]);
        }
        const double lse = softmax(logits, probs);
        loss_sum += lse - logits[0];

        // dL/dlogit_j = p_j - [j == 0]
        std::fill(d_unit.begin(), d_unit.end(), 0.0);
        for (size_t j = 0; j <= n_neg; ++j) {
          const double g = (probs[j] - (j == 0 ? 1.0 : 0.0)) * tau * inv_b;
          axpy(g, unit_items[j], d_unit);
          for (size_t k = 0; k < d; ++k) d_unit_item[k] = g * f.unit[k];
          normalize_backward(unit_items[j], item_norms[j], d_unit_item, d_item);
          axpy(1.0, d_item, grads.item_embeddings.row(negs[j]));
        }
        normalize_backward(f.unit, f.norm, d_unit, d_q);
        std::fill(d_pooled.begin(), d_pooled.end(), 0.0);
        for (size_t k = 0; k < d; ++k) {
          d_pre[k] = d_q[k] * (1.0 - f.q[k] * f.q[k]);
          grads.encoder_bias[k] += d_pre[k];
          axpy(d_pre[k], f.pooled, grads.encoder_weight.row(k));
          axpy(d_pre[k], p.encoder_weight.row(k), d_pooled);
        }
        const double w = 1.0 / static_cast<double>(input.size());
        for (ItemId i : input) axpy(w, d_pooled, grads.item_embeddings.row(i));
      }
      auto ps = p.tensors();
      auto gs = grads.tensors();
      std::array<const Tensor*, 3> cgs = {gs[0], gs[1], gs[2]};
      opt.step(ps, cgs);
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(examples.size()));
  }
  return result;
}

}  // namespace napo
