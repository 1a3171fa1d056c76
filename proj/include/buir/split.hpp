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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "buir/common.hpp"
#include "buir/dataset.hpp"
#include "buir/random.hpp"

namespace buir {

struct SplitConfig {
  double train_ratio = 0.5;  // fraction of each user's history used for training
  std::uint64_t seed = 0;
  int min_train_per_user = 1;
};

// Per-user holdout split. `train` shares the full user/item universe of the
// source dataset (items can end up with no training interactions; they stay
// in the universe and are simply cold). Validation/test are per-user item
// lists, sorted ascending.
struct DatasetSplit {
  InteractionDataset train;
  std::vector<std::vector<int>> validation;
  std::vector<std::vector<int>> test;
};

// Shuffles each user's history with the seeded generator, takes
// max(min_train_per_user, floor(ratio * count)) interactions for training
// (capped at the user's count), then halves the remainder into validation
// and test, with an odd leftover going to test.
inline DatasetSplit split_per_user(const InteractionDataset& data,
                                   const SplitConfig& cfg) {
  require(cfg.train_ratio > 0.0 && cfg.train_ratio < 1.0,
          "train ratio must lie strictly between 0 and 1");
  std::vector<std::vector<int>> items_of(data.num_users);
  for (const Interaction& e : data.interactions)
    items_of[e.user].push_back(e.item);

  DatasetSplit split;
  split.train.num_users = data.num_users;
  split.train.num_items = data.num_items;
  split.train.user_ids = data.user_ids;
  split.train.item_ids = data.item_ids;
  split.train.user_vocab = data.user_vocab;
  split.train.item_vocab = data.item_vocab;
  split.validation.resize(data.num_users);
  split.test.resize(data.num_users);

  Rng rng = make_rng(cfg.seed);
  for (int u = 0; u < data.num_users; ++u) {
    std::vector<int>& items = items_of[u];
    std::sort(items.begin(), items.end());  // canonical order before shuffling
    shuffle_span(rng, std::span<int>(items));
    const auto count = static_cast<long>(items.size());
    const long floor_train =
        static_cast<long>(std::floor(cfg.train_ratio * static_cast<double>(count)));
    const long n_train = std::min<long>(
        count, std::max<long>(cfg.min_train_per_user, floor_train));
    const long rest = count - n_train;
    const long n_val = rest / 2;  // odd leftover goes to test
    for (long i = 0; i < n_train; ++i)
      split.train.interactions.push_back({u, items[i]});
    for (long i = n_train; i < n_train + n_val; ++i)
      split.validation[u].push_back(items[i]);
    for (long i = n_train + n_val; i < count; ++i)
      split.test[u].push_back(items[i]);
    std::sort(split.validation[u].begin(), split.validation[u].end());
    std::sort(split.test[u].begin(), split.test[u].end());
  }
  return split;
}

namespace detail {

inline std::vector<Interaction> pair_rows(
    const std::vector<std::vector<int>>& per_user) {
  std::vector<Interaction> rows;
  for (int u = 0; u < static_cast<int>(per_user.size()); ++u)
    for (int v : per_user[u]) rows.push_back({u, v});
  return rows;
}

}  // namespace detail

// Writes the split manifest: train.tsv / validation.tsv / test.tsv with raw
// ids, plus user_vocab.tsv and item_vocab.tsv fixing the dense indexing.
inline void save_split(const std::string& dir, const DatasetSplit& split) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto& uni = split.train;
  write_interactions_file(dir + "/train.tsv", uni, uni.interactions);
  write_interactions_file(dir + "/validation.tsv", uni,
                          detail::pair_rows(split.validation));
  write_interactions_file(dir + "/test.tsv", uni,
                          detail::pair_rows(split.test));
  write_vocab_file(dir + "/user_vocab.tsv", uni.user_ids);
  write_vocab_file(dir + "/item_vocab.tsv", uni.item_ids);
}

inline DatasetSplit load_split(const std::string& dir) {
  DatasetSplit split;
  InteractionDataset& uni = split.train;
  uni.user_ids = read_vocab_file(dir + "/user_vocab.tsv");
  uni.item_ids = read_vocab_file(dir + "/item_vocab.tsv");
  uni.num_users = static_cast<int>(uni.user_ids.size());
  uni.num_items = static_cast<int>(uni.item_ids.size());
  for (int u = 0; u < uni.num_users; ++u) uni.user_vocab[uni.user_ids[u]] = u;
  for (int v = 0; v < uni.num_items; ++v) uni.item_vocab[uni.item_ids[v]] = v;

  auto read_pairs = [&](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open split file: " + path);
    std::vector<Interaction> rows;
    std::string line, user_tok, item_tok;
    std::size_t line_no = 0;
    ParseOptions opts;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::size_t start = line.find_first_not_of(" \t");
      if (start == std::string::npos) continue;
      if (line[start] == opts.comment) continue;
      if (!detail::split_line(line, opts, user_tok, item_tok))
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": malformed line");
      const auto uit = uni.user_vocab.find(user_tok);
      const auto iit = uni.item_vocab.find(item_tok);
      if (uit == uni.user_vocab.end() || iit == uni.item_vocab.end())
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": id not present in vocab");
      rows.push_back({uit->second, iit->second});
    }
    return rows;
  };

  uni.interactions = read_pairs(dir + "/train.tsv");
  split.validation.resize(uni.num_users);
  for (const Interaction& e : read_pairs(dir + "/validation.tsv"))
    split.validation[e.user].push_back(e.item);
  split.test.resize(uni.num_users);
  for (const Interaction& e : read_pairs(dir + "/test.tsv"))
    split.test[e.user].push_back(e.item);
  for (auto& v : split.validation) std::sort(v.begin(), v.end());
  for (auto& v : split.test) std::sort(v.begin(), v.end());
  return split;
}

}  // namespace buir
