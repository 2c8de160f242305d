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

#include <cassert>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace napo {

// Dense row-major float64 tensor. Rank 1 and 2 are all this project needs.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> values;

  static Tensor zeros(std::vector<size_t> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.values.assign(element_count(t.shape), 0.0);
    return t;
  }

  static size_t element_count(const std::vector<size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), size_t{1},
                           [](size_t a, size_t b) { return a * b; });
  }

  size_t size() const { return values.size(); }
  size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  std::span<double> row(size_t r) {
    assert(r < rows());
    return {values.data() + r * cols(), cols()};
  }
  std::span<const double> row(size_t r) const {
    assert(r < rows());
    return {values.data() + r * cols(), cols()};
  }

  double& operator()(size_t r, size_t c) { return values[r * cols() + c]; }
  double operator()(size_t r, size_t c) const { return values[r * cols() + c]; }
  double& operator[](size_t i) { return values[i]; }
  double operator[](size_t i) const { return values[i]; }

  void fill(double v) { std::fill(values.begin(), values.end(), v); }

  bool operator==(const Tensor&) const = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace napo
