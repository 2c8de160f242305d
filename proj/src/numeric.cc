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

#include "napo/numeric.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace napo {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logsumexp(std::span<const double> xs) {
  assert(!xs.empty());
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

double softmax(std::span<const double> xs, std::span<double> out) {
  assert(xs.size() == out.size() && !xs.empty());
  const double mx = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    out[i] = std::exp(xs[i] - mx);
    sum += out[i];
  }
  for (double& o : out) o /= sum;
  return mx + std::log(sum);
}

}  // namespace napo
