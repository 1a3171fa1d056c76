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

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace buir {

// Input / file-format problems: unreadable paths, malformed lines, shape
// mismatches between artifacts. Mapped to exit code 2 by the CLI.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures: degenerate norms (representation collapse), non-finite
// gradients. Mapped to exit code 3 by the CLI.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles. The whole toolkit runs in double
// precision; rows are the unit of access (one embedding per row).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) {
    return {data.data() + i * cols, cols};
  }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return data.size(); }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }

  bool operator==(const Matrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x,
                 std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::span<double> x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DataError(msg);
}

}  // namespace buir
