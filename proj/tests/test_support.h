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

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "napo/aux_rec.h"
#include "napo/data.h"
#include "napo/policy.h"

namespace napo::testing {

// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(rng_);
  }
  size_t index(size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng_); }
  bool coin() { return index(2) == 1; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Items 0..n-1. Multi-token titles are distinct 1..3-word sequences over title_words.
Catalog toy_catalog(ResponseMode mode, size_t n_items, uint64_t seed, size_t title_words = 10);

// b instances with random contexts of ctx_len items, distinct positives where possible,
// n_neg sampled negatives and candidate_size candidates.
std::vector<TrainingInstance> toy_instances(const Catalog& catalog, size_t b, size_t n_neg,
                                            uint64_t seed, size_t ctx_len = 3,
                                            size_t candidate_size = 5);

// init() with every tensor, biases included, drawn from U(-scale, scale).
PolicyParams random_policy(size_t vocab, size_t dim, double beta, uint64_t seed,
                           double scale = 0.5);
AuxParams random_aux(size_t n_items, size_t dim, uint64_t seed);

struct FdReport {
  size_t checked = 0;
  double max_rel_error = 0.0;
  size_t failures = 0;
};

// Central differences against an analytic gradient. Picks n_coords coordinates with
// |analytic| >= 1e-6 (all of them if fewer) plus a few zero-gradient ones.
// rel = |a - n| / max(|a|, |n|, floor).
FdReport finite_difference_check(const PolicyParams& params, const GradientBuffer& analytic,
                                 const std::function<double(const PolicyParams&)>& loss,
                                 size_t n_coords, uint64_t seed, double step = 1e-4,
                                 double tolerance = 1e-4, double floor = 1e-6);

}  // namespace napo::testing
