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

#include "napo/policy.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "napo/errors.h"
#include "napo/numeric.h"

namespace napo {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_tokens(const PolicyParams& params, std::span<const TokenId> tokens) {
  for (TokenId t : tokens) {
    if (t < 0 || size_t(t) >= params.vocab_size) {
      throw DataError("token " + std::to_string(t) + " outside policy vocabulary of " +
                      std::to_string(params.vocab_size));
    }
  }
}

struct ContextForward {
  std::vector<double> weights;
  std::vector<double> pooled;
  std::vector<double> z;
};

ContextForward forward_context(const PolicyParams& p, std::span<const TokenId> prompt) {
  if (prompt.empty()) throw DataError("empty prompt");
  check_tokens(p, prompt);
  const size_t n = prompt.size();
  const size_t d = p.dim;
  ContextForward f;
  f.weights.resize(n);
  double total = 0.0;
  for (size_t t = 0; t < n; ++t) {
    f.weights[t] = std::pow(p.recency_decay, static_cast<double>(n - 1 - t));
    total += f.weights[t];
  }
  for (double& w : f.weights) w /= total;
  f.pooled.assign(d, 0.0);
  for (size_t t = 0; t < n; ++t) axpy(f.weights[t], p.token_embeddings.row(prompt[t]), f.pooled);
  f.z.resize(d);
  for (size_t i = 0; i < d; ++i) {
    f.z[i] = std::tanh(dot(p.context_weight.row(i), f.pooled) + p.context_bias[i]);
  }
  return f;
}

void step_logits(const PolicyParams& p, std::span<const double> hidden, std::span<double> out) {
  for (size_t v = 0; v < p.vocab_size; ++v) {
    out[v] = dot(p.token_embeddings.row(v), hidden) + p.output_bias[v];
  }
}

}  // namespace

PolicyParams PolicyParams::zeros(size_t vocab_size, size_t dim, double beta) {
  if (vocab_size < 1 || dim < 1) throw UsageError("policy needs vocab_size >= 1 and dim >= 1");
  if (!(beta > 0)) throw UsageError("beta must be positive");
  PolicyParams p;
  p.vocab_size = vocab_size;
  p.dim = dim;
  p.beta = beta;
  p.token_embeddings = Tensor::zeros({vocab_size, dim});
  p.context_weight = Tensor::zeros({dim, dim});
  p.context_bias = Tensor::zeros({dim});
  p.output_bias = Tensor::zeros({vocab_size});
  return p;
}

PolicyParams PolicyParams::init(size_t vocab_size, size_t dim, double beta, uint64_t seed) {
  PolicyParams p = zeros(vocab_size, dim, beta);
  std::mt19937_64 rng(seed);
  const double scale = 0.1 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : p.token_embeddings.values) v = u(rng);
  for (double& v : p.context_weight.values) v = u(rng);
  return p;
}

Checkpoint PolicyParams::to_checkpoint() const {
  Checkpoint c;
  c.meta = {{"kind", "policy"},
            {"vocab_size", std::to_string(vocab_size)},
            {"dim", std::to_string(dim)},
            {"beta", format_double(beta)},
            {"recency_decay", format_double(recency_decay)}};
  auto ts = tensors();
  for (size_t i = 0; i < ts.size(); ++i) c.tensors.emplace_back(kTensorNames[i], *ts[i]);
  return c;
}

PolicyParams PolicyParams::from_checkpoint(const Checkpoint& c) {
  if (c.meta_value("kind") != "policy") throw DataError("checkpoint is not a policy");
  PolicyParams p = zeros(std::stoul(c.meta_value("vocab_size")), std::stoul(c.meta_value("dim")),
                         std::stod(c.meta_value("beta")));
  p.recency_decay = std::stod(c.meta_value("recency_decay"));
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

GradientBuffer::GradientBuffer(const PolicyParams& like)
    : token_embeddings(Tensor::zeros(like.token_embeddings.shape)),
      context_weight(Tensor::zeros(like.context_weight.shape)),
      context_bias(Tensor::zeros(like.context_bias.shape)),
      output_bias(Tensor::zeros(like.output_bias.shape)) {}

void GradientBuffer::zero() {
  for (Tensor* t : tensors()) t->fill(0.0);
}

bool GradientBuffer::all_finite() const {
  for (const Tensor* t : tensors()) {
    for (double v : t->values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double GradientBuffer::squared_norm() const {
  double s = 0.0;
  for (const Tensor* t : tensors()) s += dot(t->values, t->values);
  return s;
}

ContextState encode_context(const PolicyParams& params, std::span<const TokenId> prompt,
                            OpCounters* counters) {
  auto f = forward_context(params, prompt);
  if (counters) ++counters->f_calls;
  return ContextState{std::move(f.z), prompt.size()};
}

PolicyScore score_response(const PolicyParams& params, const ContextState& state,
                           std::span<const TokenId> response, OpCounters* counters) {
  if (response.empty()) throw DataError("empty response");
  check_tokens(params, response);
  std::vector<double> hidden = state.logits_seed;
  std::vector<double> logits(params.vocab_size);
  double log_prob = 0.0;
  for (TokenId y : response) {
    step_logits(params, hidden, logits);
    log_prob += logits[y] - logsumexp(logits);
    axpy(1.0, params.token_embeddings.row(y), hidden);
  }
  if (counters) ++counters->g_calls;
  return PolicyScore{params.beta * log_prob, std::nullopt, response.size(), params.beta};
}

PolicyScore score_ref_relative(const PolicyParams& params, const PolicyParams& ref_params,
                               std::span<const TokenId> prompt,
                               std::span<const TokenId> response) {
  PolicyScore s = score_response(params, encode_context(params, prompt), response);
  // Same beta on both sides so the ratio is beta * log(pi / pi_ref).
  PolicyParams ref_view = ref_params;
  ref_view.beta = params.beta;
  const PolicyScore r = score_response(ref_view, encode_context(ref_view, prompt), response);
  s.h_ref_relative = s.h - r.h;
  return s;
}

std::vector<TokenId> greedy_decode(const PolicyParams& params, const ContextState& state,
                                   size_t max_len, TokenId eos) {
  std::vector<TokenId> out;
  std::vector<double> hidden = state.logits_seed;
  std::vector<double> logits(params.vocab_size);
  while (out.size() < max_len) {
    step_logits(params, hidden, logits);
    // max_element returns the first maximum, i.e. the lowest token id.
    const auto best =
        static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == eos) break;
    out.push_back(best);
    axpy(1.0, params.token_embeddings.row(best), hidden);
  }
  return out;
}

ForwardPass::ForwardPass(const PolicyParams& params, bool record)
    : params_(params), record_(record) {}

size_t ForwardPass::encode_context(std::span<const TokenId> prompt) {
  auto f = forward_context(params_, prompt);
  ++counters_.f_calls;
  ContextRecord rec;
  rec.state = ContextState{f.z, prompt.size()};
  if (record_) {
    rec.tokens.assign(prompt.begin(), prompt.end());
    rec.weights = std::move(f.weights);
    rec.pooled = std::move(f.pooled);
  }
  contexts_.push_back(std::move(rec));
  return contexts_.size() - 1;
}

size_t ForwardPass::score_response(size_t context, std::span<const TokenId> response) {
  if (context >= contexts_.size()) throw std::out_of_range("unknown context handle");
  if (response.empty()) throw DataError("empty response");
  check_tokens(params_, response);
  ResponseRecord rec;
  rec.context = context;
  std::vector<double> hidden = contexts_[context].state.logits_seed;
  std::vector<double> logits(params_.vocab_size);
  std::vector<double> probs(params_.vocab_size);
  double log_prob = 0.0;
  for (TokenId y : response) {
    step_logits(params_, hidden, logits);
    const double lse = softmax(logits, probs);
    log_prob += logits[y] - lse;
    if (record_) {
      rec.hidden.push_back(hidden);
      rec.probs.push_back(probs);
    }
    axpy(1.0, params_.token_embeddings.row(y), hidden);
  }
  if (record_) rec.tokens.assign(response.begin(), response.end());
  rec.score = PolicyScore{params_.beta * log_prob, std::nullopt, response.size(), params_.beta};
  ++counters_.g_calls;
  responses_.push_back(std::move(rec));
  return responses_.size() - 1;
}

void ForwardPass::attach_reference(size_t score, double h_ref) {
  PolicyScore& s = responses_.at(score).score;
  s.h_ref_relative = s.h - h_ref;
}

void ForwardPass::require_recorded() const {
  if (!record_) throw std::logic_error("backward on a forward pass that did not record");
}

void ForwardPass::backward_response(const ResponseRecord& r, double upstream,
                                    GradientBuffer& grads, std::span<double> d_context) const {
  const PolicyParams& p = params_;
  const size_t d = p.dim;
  std::vector<double> d_logits(p.vocab_size);
  std::vector<double> d_hidden(d);
  // d_suffix accumulates dh_t over steps t > s, which is the gradient
  // reaching E[y_s] through the prefix sums.
  std::vector<double> d_suffix(d, 0.0);
  for (size_t t = r.tokens.size(); t-- > 0;) {
    const auto& probs = r.probs[t];
    const auto& hidden = r.hidden[t];
    for (size_t v = 0; v < p.vocab_size; ++v) d_logits[v] = -upstream * p.beta * probs[v];
    d_logits[r.tokens[t]] += upstream * p.beta;

    std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
    for (size_t v = 0; v < p.vocab_size; ++v) {
      grads.output_bias[v] += d_logits[v];
      axpy(d_logits[v], hidden, grads.token_embeddings.row(v));
      axpy(d_logits[v], p.token_embeddings.row(v), d_hidden);
    }
    // y_t feeds every later step's hidden state.
    axpy(1.0, d_suffix, grads.token_embeddings.row(r.tokens[t]));
    axpy(1.0, d_hidden, d_suffix);
  }
  axpy(1.0, d_suffix, d_context);
}

void ForwardPass::backward_context(const ContextRecord& c, std::span<const double> d_context,
                                   GradientBuffer& grads) const {
  const PolicyParams& p = params_;
  const size_t d = p.dim;
  std::vector<double> d_pre(d);
  for (size_t i = 0; i < d; ++i) {
    const double z = c.state.logits_seed[i];
    d_pre[i] = d_context[i] * (1.0 - z * z);
  }
  std::vector<double> d_pooled(d, 0.0);
  for (size_t i = 0; i < d; ++i) {
    grads.context_bias[i] += d_pre[i];
    axpy(d_pre[i], c.pooled, grads.context_weight.row(i));
    axpy(d_pre[i], p.context_weight.row(i), d_pooled);
  }
  for (size_t t = 0; t < c.tokens.size(); ++t) {
    axpy(c.weights[t], d_pooled, grads.token_embeddings.row(c.tokens[t]));
  }
}

void ForwardPass::backward(size_t score, double upstream, GradientBuffer& grads) const {
  require_recorded();
  const ResponseRecord& r = responses_.at(score);
  std::vector<double> d_context(params_.dim, 0.0);
  backward_response(r, upstream, grads, d_context);
  backward_context(contexts_[r.context], d_context, grads);
}

void ForwardPass::backward_all(std::span<const double> upstream, GradientBuffer& grads) const {
  require_recorded();
  if (upstream.size() != responses_.size()) {
    throw std::invalid_argument("backward_all needs one upstream value per score");
  }
  std::vector<std::vector<double>> d_context(contexts_.size(),
                                             std::vector<double>(params_.dim, 0.0));
  for (size_t i = 0; i < responses_.size(); ++i) {
    if (upstream[i] == 0.0) continue;
    backward_response(responses_[i], upstream[i], grads, d_context[responses_[i].context]);
  }
  for (size_t c = 0; c < contexts_.size(); ++c) backward_context(contexts_[c], d_context[c], grads);
}

}  // namespace napo
