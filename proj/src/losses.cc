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

#include "napo/losses.h"

#include <cmath>
#include <stdexcept>

#include "napo/errors.h"
#include "napo/numeric.h"

namespace napo {
namespace {

double value_of(const PolicyScore& s, bool use_reference) {
  if (!use_reference) return s.h;
  if (!s.h_ref_relative) throw UsageError("reference-relative score required but missing");
  return *s.h_ref_relative;
}

double length_of(const PolicyScore& s, bool length_normalize) {
  if (!length_normalize) return 1.0;
  if (s.response_length < 1) throw UsageError("response_length must be >= 1");
  return static_cast<double>(s.response_length);
}

// softplus(-margin) and its derivative with respect to margin.
std::pair<double, double> neg_log_sigmoid(double margin) {
  return {softplus(-margin), -sigmoid(-margin)};
}

}  // namespace

LossResult sft_loss(const PolicyScore& positive) {
  if (!(positive.beta > 0)) throw UsageError("beta must be positive");
  return {-positive.h / positive.beta, -1.0 / positive.beta, {}};
}

LossResult dpo_loss(const PolicyScore& positive, const PolicyScore& negative) {
  const auto [value, d] = neg_log_sigmoid(value_of(positive, true) - value_of(negative, true));
  return {value, d, {-d}};
}

LossResult simpo_loss(const PolicyScore& positive, const PolicyScore& negative, double gamma0,
                      bool length_normalize) {
  const double lp = length_of(positive, length_normalize);
  const double ln = length_of(negative, length_normalize);
  const auto [value, d] = neg_log_sigmoid(positive.h / lp - negative.h / ln - gamma0);
  return {value, d / lp, {-d / ln}};
}

LossResult sdpo_loss(const PolicyScore& positive, std::span<const PolicyScore> negatives,
                     bool use_reference) {
  if (negatives.empty()) throw UsageError("preference loss needs at least one negative");
  std::vector<double> terms(negatives.size());
  for (size_t j = 0; j < negatives.size(); ++j) terms[j] = value_of(negatives[j], use_reference);
  std::vector<double> weights(terms.size());
  const double lse = softmax(terms, weights);
  const auto [value, d] = neg_log_sigmoid(value_of(positive, use_reference) - lse);
  LossResult r{value, d, std::vector<double>(terms.size())};
  for (size_t j = 0; j < terms.size(); ++j) r.d_negatives[j] = -d * weights[j];
  return r;
}

LossResult napo_loss(const PreferenceInput& input) {
  const size_t n = input.negatives.size();
  if (n == 0) throw UsageError("preference loss needs at least one negative");
  if (!(input.gamma >= 0)) throw UsageError("gamma must be >= 0");

  const double lp = length_of(input.positive, input.length_normalize);
  const double pos = value_of(input.positive, input.use_reference) / lp;
  const size_t offset = input.include_positive_in_denominator ? 1 : 0;
  std::vector<double> terms(n + offset);
  std::vector<double> lengths(n);
  if (offset) terms[0] = pos;
  for (size_t j = 0; j < n; ++j) {
    lengths[j] = length_of(input.negatives[j], input.length_normalize);
    terms[j + offset] = value_of(input.negatives[j], input.use_reference) / lengths[j];
  }
  std::vector<double> weights(terms.size());
  const double lse = softmax(terms, weights);
  const auto [value, d] = neg_log_sigmoid(pos - lse - input.gamma);

  LossResult r;
  r.value = value;
  r.d_positive = d * (1.0 - (offset ? weights[0] : 0.0)) / lp;
  r.d_negatives.resize(n);
  for (size_t j = 0; j < n; ++j) r.d_negatives[j] = -d * weights[j + offset] / lengths[j];
  return r;
}

LossResult napo_loss(const PolicyScore& positive, const HybridNegativeSet& negatives,
                     double gamma, bool length_normalize) {
  PreferenceInput in;
  in.positive = positive;
  in.negatives = negatives.scores();
  in.gamma = gamma;
  in.length_normalize = length_normalize;
  return napo_loss(in);
}

}  // namespace napo
