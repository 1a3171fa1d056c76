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

// Adam with bias correction and coupled L2 regularization (lambda * param is
// added to the gradient before the moment updates). Embedding rows that
// receive no gradient in a step are skipped entirely: no moment decay, no
// L2 shrinkage, bitwise untouched.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "buir/common.hpp"

namespace buir {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates for one parameter tensor.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;

  void init(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
  bool operator==(const AdamState&) const = default;
};

// Optimizer state for one model: the shared step counter plus moments for
// the four trainable tensors (user table, item table, predictor weight,
// predictor bias). Target-encoder parameters deliberately have no slot here.
struct ModelOptState {
  std::int64_t t = 0;
  AdamState user;
  AdamState item;
  AdamState pred_weight;
  AdamState pred_bias;

  bool operator==(const ModelOptState&) const = default;
};

namespace detail {

inline void adam_apply(double* p, const double* g, double* m, double* v,
                       std::size_t n, std::int64_t t,
                       const OptimizerConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    const double grad = g[i] + cfg.weight_decay * p[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad * grad;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace detail

inline void check_finite_gradient(std::span<const double> g) {
  if (!all_finite(g))
    throw NumericError("non-finite gradient encountered, step aborted");
}

inline void adam_step_dense(std::span<double> params,
                            std::span<const double> grads, AdamState& state,
                            std::int64_t t, const OptimizerConfig& cfg) {
  require(params.size() == grads.size() && params.size() == state.m.size() &&
              params.size() == state.v.size(),
          "adam state/parameter shape mismatch");
  check_finite_gradient(grads);
  detail::adam_apply(params.data(), grads.data(), state.m.data(),
                     state.v.data(), params.size(), t, cfg);
}

// Lazy sparse update: only the listed rows of the parameter matrix (and of
// the moment estimates) are touched. Bias correction uses the shared step
// counter.
inline void adam_step_rows(Matrix& params, const Matrix& grads,
                           std::span<const int> rows, AdamState& state,
                           std::int64_t t, const OptimizerConfig& cfg) {
  require(params.same_shape(grads) && params.size() == state.m.size(),
          "adam state/parameter shape mismatch");
  const std::size_t d = params.cols;
  for (int r : rows) check_finite_gradient(grads.row(r));
  for (int r : rows) {
    const std::size_t off = static_cast<std::size_t>(r) * d;
    detail::adam_apply(params.data.data() + off, grads.data.data() + off,
                       state.m.data() + off, state.v.data() + off, d, t, cfg);
  }
}

}  // namespace buir
