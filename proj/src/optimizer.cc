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

#include "napo/optimizer.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "napo/errors.h"

namespace napo {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer_kind(std::string_view s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw UsageError("unknown optimizer '" + std::string(s) + "' (expected sgd|adam)");
}

void Optimizer::step(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("params/grads size mismatch");
  ++t_;
  if (config_.kind == OptimizerKind::kSgd) {
    for (size_t k = 0; k < params.size(); ++k) {
      axpy(-config_.lr, grads[k]->values, params[k]->values);
    }
    return;
  }
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.push_back(Tensor::zeros(p->shape));
      v_.push_back(Tensor::zeros(p->shape));
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("optimizer tensor list changed");
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k]->values;
    const auto& g = grads[k]->values;
    auto& m = m_[k].values;
    auto& v = v_[k].values;
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

double clip_global_norm(std::span<Tensor* const> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor* g : grads) sq += dot(g->values, g->values);
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const double s = max_norm / norm;
    for (Tensor* g : grads) {
      for (double& v : g->values) v *= s;
    }
  }
  return norm;
}

}  // namespace napo
