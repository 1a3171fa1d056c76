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

#include <cstdint>
#include <span>

#include "buir/common.hpp"
#include "buir/random.hpp"

namespace buir {

// One D-dimensional embedding row per user and per item. Also reused as the
// value type for per-node representations produced by the graph encoder
// (same shapes, same access pattern).
struct EmbeddingTable {
  Matrix users;  // M x D
  Matrix items;  // N x D

  int dim() const { return static_cast<int>(users.cols); }
  bool same_shape(const EmbeddingTable& o) const {
    return users.same_shape(o.users) && items.same_shape(o.items);
  }
};

enum class Side { kUser, kItem };

// Gaussian init, mean 0, std 1/sqrt(D).
inline EmbeddingTable init_embedding_table(int num_users, int num_items,
                                           int dim, Rng& rng) {
  EmbeddingTable t;
  t.users = Matrix(num_users, dim);
  t.items = Matrix(num_items, dim);
  const double std_dev = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : t.users.data) v = std_dev * normal_double(rng);
  for (double& v : t.items.data) v = std_dev * normal_double(rng);
  return t;
}

// Plain table lookup; the returned span aliases the table row, so parameter
// updates are visible through it.
inline std::span<const double> encode_id(const EmbeddingTable& table,
                                         int index, Side side) {
  const Matrix& m = side == Side::kUser ? table.users : table.items;
  require(index >= 0 && static_cast<std::size_t>(index) < m.rows,
          "embedding index out of range");
  return m.row(index);
}

}  // namespace buir
