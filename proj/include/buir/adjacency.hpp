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
#include <cstddef>
#include <span>
#include <vector>

#include "buir/common.hpp"
#include "buir/dataset.hpp"

namespace buir {

// Bipartite interaction graph in CSR form, both directions. Every undirected
// user-item edge carries one id (its rank in (user, item) lexicographic
// order); both CSR views reference that id, so a per-edge mask applies to
// the edge as a whole.
struct BipartiteAdjacency {
  int num_users = 0;
  int num_items = 0;
  std::size_t num_edges = 0;

  std::vector<std::size_t> user_offsets;  // size num_users + 1
  std::vector<int> user_items;            // neighbor item ids, ascending per user
  std::vector<std::size_t> user_edge_ids;

  std::vector<std::size_t> item_offsets;  // size num_items + 1
  std::vector<int> item_users;            // neighbor user ids, ascending per item
  std::vector<std::size_t> item_edge_ids;

  std::span<const int> items_of(int u) const {
    return {user_items.data() + user_offsets[u],
            user_offsets[u + 1] - user_offsets[u]};
  }
  std::span<const int> users_of(int v) const {
    return {item_users.data() + item_offsets[v],
            item_offsets[v + 1] - item_offsets[v]};
  }
  std::size_t user_degree(int u) const {
    return user_offsets[u + 1] - user_offsets[u];
  }
  std::size_t item_degree(int v) const {
    return item_offsets[v + 1] - item_offsets[v];
  }

  bool has_edge(int u, int v) const {
    const auto items = items_of(u);
    return std::binary_search(items.begin(), items.end(), v);
  }
};

// Builds both CSR directions from a deduplicated training set. Neighbor
// lists come out sorted ascending and the two directions reference the same
// edge ids.
inline BipartiteAdjacency build_adjacency(const InteractionDataset& train) {
  BipartiteAdjacency adj;
  adj.num_users = train.num_users;
  adj.num_items = train.num_items;
  adj.num_edges = train.interactions.size();

  std::vector<Interaction> edges = train.interactions;
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });

  adj.user_offsets.assign(adj.num_users + 1, 0);
  adj.item_offsets.assign(adj.num_items + 1, 0);
  for (const Interaction& e : edges) {
    ++adj.user_offsets[e.user + 1];
    ++adj.item_offsets[e.item + 1];
  }
  for (int u = 0; u < adj.num_users; ++u)
    adj.user_offsets[u + 1] += adj.user_offsets[u];
  for (int v = 0; v < adj.num_items; ++v)
    adj.item_offsets[v + 1] += adj.item_offsets[v];

  adj.user_items.resize(adj.num_edges);
  adj.user_edge_ids.resize(adj.num_edges);
  adj.item_users.resize(adj.num_edges);
  adj.item_edge_ids.resize(adj.num_edges);

  // Edges are already in (user, item) order, which is CSR order for the user
  // side directly and yields ascending user lists per item on the other side.
  std::vector<std::size_t> item_cursor(adj.item_offsets.begin(),
                                       adj.item_offsets.end() - 1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj.user_items[e] = edges[e].item;
    adj.user_edge_ids[e] = e;
    const std::size_t slot = item_cursor[edges[e].item]++;
    adj.item_users[slot] = edges[e].user;
    adj.item_edge_ids[slot] = e;
  }
  return adj;
}

}  // namespace buir
