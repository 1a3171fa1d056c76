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

#include <algorithm>
#include <span>
#include <vector>

#include "buir/common.hpp"

namespace buir {

struct ScoredItem {
  int item = 0;
  double score = 0.0;
};

// Top k of the non-excluded items by score, ties broken by ascending item
// index. `excluded_sorted` must be sorted ascending.
inline std::vector<ScoredItem> select_top_k(
    std::span<const double> scores, std::span<const int> excluded_sorted,
    int k) {
  std::vector<ScoredItem> pool;
  pool.reserve(scores.size());
  for (int v = 0; v < static_cast<int>(scores.size()); ++v) {
    if (std::binary_search(excluded_sorted.begin(), excluded_sorted.end(), v))
      continue;
    pool.push_back({v, scores[v]});
  }
  if (k > static_cast<int>(pool.size()))
    throw DataError("top-k request exceeds candidate pool size");
  const auto better = [](const ScoredItem& a, const ScoredItem& b) {
    return a.score != b.score ? a.score > b.score : a.item < b.item;
  };
  std::partial_sort(pool.begin(), pool.begin() + k, pool.end(), better);
  pool.resize(k);
  return pool;
}

}  // namespace buir
