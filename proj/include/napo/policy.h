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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "napo/checkpoint.h"
#include "napo/data.h"
#include "napo/tensor.h"

namespace napo {

// The autoregressive policy pi_theta(y|x), split into
//   F: prompt tokens -> context vector z
//        z = tanh(W * pool(prompt) + b),  pool = recency-weighted mean of
//        token embeddings with weight decay^(distance from the end)
//   G: (z, response) -> beta * sum_t log softmax(E h_t + c)[y_t]
//        h_t = z + sum_{s<t} E[y_s]
// Token embeddings E are shared by F and G.
struct PolicyParams {
  static constexpr std::array<std::string_view, 4> kTensorNames = {
      "token_embeddings", "context_weight", "context_bias", "output_bias"};

  size_t vocab_size = 0;
  size_t dim = 0;
  double beta = 1.0;
  double recency_decay = 0.8;

  Tensor token_embeddings;  // [vocab x dim]
  Tensor context_weight;    // [dim x dim]
  Tensor context_bias;      // [dim]
  Tensor output_bias;       // [vocab]

  static PolicyParams zeros(size_t vocab_size, size_t dim, double beta = 1.0);
  // Weights uniform in [-0.1, 0.1] / sqrt(dim); biases zero.
  static PolicyParams init(size_t vocab_size, size_t dim, double beta, uint64_t seed);

  std::array<Tensor*, 4> tensors() {
    return {&token_embeddings, &context_weight, &context_bias, &output_bias};
  }
  std::array<const Tensor*, 4> tensors() const {
    return {&token_embeddings, &context_weight, &context_bias, &output_bias};
  }

  Checkpoint to_checkpoint() const;
  static PolicyParams from_checkpoint(const Checkpoint& ckpt);

  bool operator==(const PolicyParams&) const = default;
};

// Holds dLoss/dtheta with the same shapes as PolicyParams.
struct GradientBuffer {
  Tensor token_embeddings;
  Tensor context_weight;
  Tensor context_bias;
  Tensor output_bias;

  explicit GradientBuffer(const PolicyParams& like);

  std::array<Tensor*, 4> tensors() {
    return {&token_embeddings, &context_weight, &context_bias, &output_bias};
  }
  std::array<const Tensor*, 4> tensors() const {
    return {&token_embeddings, &context_weight, &context_bias, &output_bias};
  }
  void zero();
  bool all_finite() const;
  double squared_norm() const;
};

struct ContextState {
  std::vector<double> logits_seed;  // z = F(x)
  size_t prompt_length = 0;

  bool operator==(const ContextState&) const = default;
};

struct PolicyScore {
  double h = 0.0;                        // beta * log pi(y|x)
  std::optional<double> h_ref_relative;  // beta * log(pi / pi_ref)
  size_t response_length = 1;
  double beta = 1.0;
};

struct OpCounters {
  int64_t f_calls = 0;
  int64_t g_calls = 0;
};

// Pure F and G. Each call bumps `counters` when given.
ContextState encode_context(const PolicyParams& params, std::span<const TokenId> prompt,
                            OpCounters* counters = nullptr);
PolicyScore score_response(const PolicyParams& params, const ContextState& state,
                           std::span<const TokenId> response, OpCounters* counters = nullptr);

// Scores `response` under both models; the reference gets no gradient.
PolicyScore score_ref_relative(const PolicyParams& params, const PolicyParams& ref_params,
                               std::span<const TokenId> prompt, std::span<const TokenId> response);

// Argmax decoding from `state` until `eos` or max_len tokens. Ties go to the
// lowest token id. The end-of-response token is not included in the output.
std::vector<TokenId> greedy_decode(const PolicyParams& params, const ContextState& state,
                                   size_t max_len, TokenId eos);

// Records F and G evaluations against one parameter snapshot so that
// gradients can be pulled back later. Handles are indices in call order.
class ForwardPass {
 public:
  ForwardPass(const PolicyParams& params, bool record);

  size_t encode_context(std::span<const TokenId> prompt);
  size_t score_response(size_t context, std::span<const TokenId> response);
  // Sets h_ref_relative = h - h_ref for a recorded score.
  void attach_reference(size_t score, double h_ref);

  const ContextState& context(size_t handle) const { return contexts_.at(handle).state; }
  const PolicyScore& score(size_t handle) const { return responses_.at(handle).score; }
  size_t num_contexts() const { return contexts_.size(); }
  size_t num_scores() const { return responses_.size(); }
  const OpCounters& counters() const { return counters_; }

  // grads += upstream * dh(score)/dtheta
  void backward(size_t score, double upstream, GradientBuffer& grads) const;
  // Equivalent to backward(i, upstream[i]) for every score, with F
  // differentiated once per context.
  void backward_all(std::span<const double> upstream, GradientBuffer& grads) const;

 private:
  struct ContextRecord {
    std::vector<TokenId> tokens;
    std::vector<double> weights;
    std::vector<double> pooled;
    ContextState state;
  };
  struct ResponseRecord {
    size_t context = 0;
    std::vector<TokenId> tokens;
    std::vector<std::vector<double>> hidden;  // h_t per step
    std::vector<std::vector<double>> probs;   // softmax per step
    PolicyScore score;
  };

  void require_recorded() const;
  // Pulls dh(score) back to the token/output parameters; adds dz into d_context.
  void backward_response(const ResponseRecord& r, double upstream, GradientBuffer& grads,
                         std::span<double> d_context) const;
  void backward_context(const ContextRecord& c, std::span<const double> d_context,
                        GradientBuffer& grads) const;

  const PolicyParams& params_;
  bool record_;
  std::vector<ContextRecord> contexts_;
  std::vector<ResponseRecord> responses_;
  OpCounters counters_;
};

}  // namespace napo
