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
#include <vector>

#include "buir/adjacency.hpp"
#include "buir/common.hpp"
#include "buir/random.hpp"

namespace buir {

// Neighbor-dropout configuration. A fresh drop probability p ~ U(0, P) is
// drawn per training step; each edge then survives independently with
// probability 1 - p.
struct AugmentConfig {
  double max_drop_probability = 1.0;
  bool enabled = true;
};

// One sampled subgraph view: a keep flag per edge id plus the p it was drawn
// with. A single view is shared by the whole batch and by both encoders
// within one training step.
struct AugmentedNeighborhood {
  std::vector<std::uint8_t> edge_mask;
  double drop_probability = 0.0;

  bool kept(std::size_t edge_id) const { return edge_mask[edge_id] != 0; }
};

// Bernoulli keep mask for a fixed drop probability.
inline AugmentedNeighborhood edge_mask_with_drop(const BipartiteAdjacency& adj,
                                                 double p, Rng& rng) {
  AugmentedNeighborhood aug;
  aug.drop_probability = p;
  aug.edge_mask.resize(adj.num_edges);
  for (std::size_t e = 0; e < adj.num_edges; ++e)
    aug.edge_mask[e] = uniform_double(rng) >= p ? 1 : 0;
  return aug;
}

inline AugmentedNeighborhood sample_augmentation(const BipartiteAdjacency& adj,
                                                 const AugmentConfig& cfg,
                                                 Rng& rng) {
  require(cfg.max_drop_probability >= 0.0 && cfg.max_drop_probability <= 1.0,
          "max drop probability must lie in [0, 1]");
  const double p = cfg.max_drop_probability * uniform_double(rng);
  return edge_mask_with_drop(adj, p, rng);
}

}  // namespace buir
