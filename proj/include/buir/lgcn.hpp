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

// Light graph convolution over the bipartite interaction graph: weightless
// linear propagation with 1/sqrt(deg_u * deg_v) edge weights and a uniform
// mean over layers 0..K as the final representation. When an edge mask is
// applied, degrees are recomputed on the masked graph (the neighborhood
// itself is redefined, not rescaled).

#pragma once

#include <cmath>
#include <vector>

#include "buir/adjacency.hpp"
#include "buir/augment.hpp"
#include "buir/common.hpp"
#include "buir/embedding.hpp"

namespace buir {

struct LgcnConfig {
  int num_layers = 2;
};

namespace detail {

struct EdgeWeights {
  std::vector<double> inv_sqrt_user_deg;
  std::vector<double> inv_sqrt_item_deg;
};

// Degrees of the (possibly masked) graph; isolated nodes get weight 0, so
// they receive nothing from propagation.
inline EdgeWeights masked_edge_weights(const BipartiteAdjacency& adj,
                                       const AugmentedNeighborhood* aug) {
  EdgeWeights w;
  w.inv_sqrt_user_deg.assign(adj.num_users, 0.0);
  w.inv_sqrt_item_deg.assign(adj.num_items, 0.0);
  std::vector<std::size_t> udeg(adj.num_users, 0), ideg(adj.num_items, 0);
  for (int u = 0; u < adj.num_users; ++u) {
    const auto items = adj.items_of(u);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::size_t e = adj.user_edge_ids[adj.user_offsets[u] + i];
      if (aug == nullptr || aug->kept(e)) {
        ++udeg[u];
        ++ideg[items[i]];
      }
    }
  }
  for (int u = 0; u < adj.num_users; ++u)
    if (udeg[u] > 0)
      w.inv_sqrt_user_deg[u] = 1.0 / std::sqrt(static_cast<double>(udeg[u]));
  for (int v = 0; v < adj.num_items; ++v)
    if (ideg[v] > 0)
      w.inv_sqrt_item_deg[v] = 1.0 / std::sqrt(static_cast<double>(ideg[v]));
  return w;
}

// One propagation hop. The hop operator is symmetric (the same 1/sqrt(du*dv)
// weight serves both directions), which is what makes the adjoint below a
// plain re-application of the forward propagation.
inline void propagate_hop(const Matrix& user_in, const Matrix& item_in,
                          const BipartiteAdjacency& adj,
                          const AugmentedNeighborhood* aug,
                          const EdgeWeights& w, Matrix& user_out,
                          Matrix& item_out) {
  user_out.fill(0.0);
  item_out.fill(0.0);
  for (int u = 0; u < adj.num_users; ++u) {
    const auto items = adj.items_of(u);
    auto out_row = user_out.row(u);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::size_t e = adj.user_edge_ids[adj.user_offsets[u] + i];
      if (aug != nullptr && !aug->kept(e)) continue;
      const int v = items[i];
      const double weight =
          w.inv_sqrt_user_deg[u] * w.inv_sqrt_item_deg[v];
      axpy(weight, item_in.row(v), out_row);
      axpy(weight, user_in.row(u), item_out.row(v));
    }
  }
}

// Mean of layers 0..num_layers of the propagation applied to (users, items).
// This is the forward map and, because each hop is symmetric, also its own
// adjoint; the gradient pass reuses it directly.
inline EmbeddingTable propagate_layer_mean(const Matrix& users,
                                           const Matrix& items,
                                           const BipartiteAdjacency& adj,
                                           const LgcnConfig& cfg,
                                           const AugmentedNeighborhood* aug) {
  require(static_cast<int>(users.rows) == adj.num_users &&
              static_cast<int>(items.rows) == adj.num_items,
          "embedding table shape does not match adjacency");
  require(cfg.num_layers >= 0, "layer count must be non-negative");
  if (aug != nullptr)
    require(aug->edge_mask.size() == adj.num_edges,
            "edge mask length does not match edge count");

  EmbeddingTable out;
  out.users = users;
  out.items = items;
  if (cfg.num_layers == 0) return out;

  const EdgeWeights w = masked_edge_weights(adj, aug);
  Matrix cur_u = users, cur_i = items;
  Matrix next_u(users.rows, users.cols), next_i(items.rows, items.cols);
  for (int k = 0; k < cfg.num_layers; ++k) {
    propagate_hop(cur_u, cur_i, adj, aug, w, next_u, next_i);
    for (std::size_t i = 0; i < out.users.data.size(); ++i)
      out.users.data[i] += next_u.data[i];
    for (std::size_t i = 0; i < out.items.data.size(); ++i)
      out.items.data[i] += next_i.data[i];
    std::swap(cur_u, next_u);
    std::swap(cur_i, next_i);
  }
  const double inv = 1.0 / static_cast<double>(cfg.num_layers + 1);
  scale(std::span<double>(out.users.data), inv);
  scale(std::span<double>(out.items.data), inv);
  return out;
}

}  // namespace detail

// Forward pass: per-node representations from the embedding table. Pass
// aug == nullptr for the full graph.
inline EmbeddingTable encode_lgcn(const EmbeddingTable& table,
                                  const BipartiteAdjacency& adj,
                                  const LgcnConfig& cfg,
                                  const AugmentedNeighborhood* aug = nullptr) {
  return detail::propagate_layer_mean(table.users, table.items, adj, cfg, aug);
}

// Exact gradient of encode_lgcn with respect to the embedding table, given
// the gradient on the final representations. The forward map is linear and
// symmetric, so the adjoint is the same layer-mean propagation.
inline EmbeddingTable encode_lgcn_backward(
    const EmbeddingTable& grad_out, const BipartiteAdjacency& adj,
    const LgcnConfig& cfg, const AugmentedNeighborhood* aug = nullptr) {
  return detail::propagate_layer_mean(grad_out.users, grad_out.items, adj, cfg,
                                      aug);
}

}  // namespace buir
