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

#include <span>

namespace napo {

// log(1 + e^x) without overflow for large |x|.
double softplus(double x);

// 1 / (1 + e^-x), evaluated on the stable branch for either sign.
double sigmoid(double x);

// log(sum_i e^{x_i}) with the max shifted out. Requires non-empty input.
double logsumexp(std::span<const double> xs);

// Writes softmax(xs) into out (same length) and returns logsumexp(xs).
double softmax(std::span<const double> xs, std::span<double> out);

}  // namespace napo
