// Copyright 2026 The buir-cf Authors
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
#include <vector>

#include "buir/common.hpp"
#include "buir/random.hpp"

namespace buir {

// Single affine D -> D map applied on top of the online encoder.
struct PredictorParams {
  Matrix weight;             // D x D
  std::vector<double> bias;  // D

  int dim() const { return static_cast<int>(bias.size()); }
};

// Xavier-uniform weight, zero bias.
inline PredictorParams init_predictor(int dim, Rng& rng) {
  PredictorParams q;
  q.weight = Matrix(dim, dim);
  q.bias.assign(dim, 0.0);
  const double bound = std::sqrt(3.0 / static_cast<double>(dim));
  for (double& v : q.weight.data)
    v = bound * (2.0 * uniform_double(rng) - 1.0);
  return q;
}

inline PredictorParams identity_predictor(int dim) {
  PredictorParams q;
  q.weight = Matrix(dim, dim);
  q.bias.assign(dim, 0.0);
  for (int i = 0; i < dim; ++i) q.weight.at(i, i) = 1.0;
  return q;
}

// out = weight * x + bias
inline void predict(const PredictorParams& q, std::span<const double> x,
                    std::span<double> out) {
  const auto d = static_cast<std::size_t>(q.dim());
  require(x.size() == d && out.size() == d && q.weight.rows == d &&
              q.weight.cols == d,
          "predictor dimension mismatch");
  for (std::size_t i = 0; i < d; ++i)
    out[i] = q.bias[i] + dot(q.weight.row(i), x);
}

inline std::vector<double> predict(const PredictorParams& q,
                                   std::span<const double> x) {
  std::vector<double> out(q.dim());
  predict(q, x, out);
  return out;
}

// out = weight^T * g (gradient of predict with respect to its input)
inline void predict_backward_input(const PredictorParams& q,
                                   std::span<const double> g,
                                   std::span<double> out) {
  const auto d = static_cast<std::size_t>(q.dim());
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += q.weight.at(i, j) * g[i];
    out[j] = s;
  }
}

}  // namespace buir
