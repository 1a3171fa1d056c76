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

// Implicit-feedback dataset handling: parsing delimited interaction logs,
// long-tail filtering, and the raw-id <-> dense-index vocabularies.

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "buir/common.hpp"

namespace buir {

// One observed positive user-item pair, in dense 0-based indices.
struct Interaction {
  int user = 0;
  int item = 0;

  bool operator==(const Interaction&) const = default;
};

// A deduplicated set of positive interactions over dense user/item universes.
// Raw ids are opaque strings; dense indices are assigned by first appearance,
// so re-parsing the same file always yields the same mapping.
struct InteractionDataset {
  int num_users = 0;
  int num_items = 0;
  std::vector<Interaction> interactions;
  std::vector<std::string> user_ids;  // dense index -> raw id
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, int> user_vocab;  // raw id -> dense index
  std::unordered_map<std::string, int> item_vocab;
};

struct ParseOptions {
  // 0 means "any run of whitespace"; otherwise a single delimiter character.
  char delimiter = 0;
  char comment = '#';
};

namespace detail {

inline std::uint64_t pair_key(int u, int v) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
         static_cast<std::uint32_t>(v);
}

inline bool split_line(const std::string& line, const ParseOptions& opts,
                       std::string& user_tok, std::string& item_tok) {
  if (opts.delimiter == 0) {
    std::istringstream ss(line);
    return static_cast<bool>(ss >> user_tok >> item_tok);
  }
  const auto first = line.find(opts.delimiter);
  if (first == std::string::npos) return false;
  auto second = line.find(opts.delimiter, first + 1);
  if (second == std::string::npos) second = line.size();
  user_tok = line.substr(0, first);
  item_tok = line.substr(first + 1, second - first - 1);
  return !user_tok.empty() && !item_tok.empty();
}

}  // namespace detail

// Parses "user item [extra columns...]" lines into a dense dataset.
// Comment lines and blank lines are skipped, duplicate pairs collapse to one,
// extra columns (ratings, timestamps) are ignored.
inline InteractionDataset parse_interactions(std::istream& in,
                                             const std::string& name,
                                             const ParseOptions& opts = {}) {
  InteractionDataset ds;
  std::unordered_set<std::uint64_t> seen;
  std::string line, user_tok, item_tok;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == opts.comment) continue;
    if (!detail::split_line(line, opts, user_tok, item_tok)) {
      throw DataError(name + ":" + std::to_string(line_no) +
                      ": malformed line, expected at least two fields");
    }
    auto [uit, unew] = ds.user_vocab.try_emplace(
        user_tok, static_cast<int>(ds.user_ids.size()));
    if (unew) ds.user_ids.push_back(user_tok);
    auto [iit, inew] = ds.item_vocab.try_emplace(
        item_tok, static_cast<int>(ds.item_ids.size()));
    if (inew) ds.item_ids.push_back(item_tok);
    const int u = uit->second;
    const int v = iit->second;
    if (seen.insert(detail::pair_key(u, v)).second) {
      ds.interactions.push_back({u, v});
    }
  }
  ds.num_users = static_cast<int>(ds.user_ids.size());
  ds.num_items = static_cast<int>(ds.item_ids.size());
  if (ds.interactions.empty())
    throw DataError(name + ": no interactions found");
  return ds;
}

inline InteractionDataset parse_interactions(const std::string& path,
                                             const ParseOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction file: " + path);
  return parse_interactions(in, path, opts);
}

// Rebuilds a dataset from a subset of interactions, reassigning dense indices
// by first appearance and carrying the surviving raw ids over.
inline InteractionDataset reindex_dataset(
    const InteractionDataset& src, const std::vector<Interaction>& kept) {
  InteractionDataset out;
  std::vector<int> user_map(src.num_users, -1);
  std::vector<int> item_map(src.num_items, -1);
  out.interactions.reserve(kept.size());
  for (const Interaction& e : kept) {
    int& u = user_map[e.user];
    if (u < 0) {
      u = static_cast<int>(out.user_ids.size());
      out.user_ids.push_back(src.user_ids[e.user]);
    }
    int& v = item_map[e.item];
    if (v < 0) {
      v = static_cast<int>(out.item_ids.size());
      out.item_ids.push_back(src.item_ids[e.item]);
    }
    out.interactions.push_back({u, v});
  }
  out.num_users = static_cast<int>(out.user_ids.size());
  out.num_items = static_cast<int>(out.item_ids.size());
  for (int u = 0; u < out.num_users; ++u) out.user_vocab[out.user_ids[u]] = u;
  for (int v = 0; v < out.num_items; ++v) out.item_vocab[out.item_ids[v]] = v;
  return out;
}

// Removes users and items below the interaction-count thresholds, iterating
// until a fixed point: dropping an item can push a user under its threshold
// and vice versa. The survivors are densely reindexed.
inline InteractionDataset filter_long_tail(const InteractionDataset& data,
                                           int min_user_interactions,
                                           int min_item_interactions) {
  require(min_user_interactions >= 0 && min_item_interactions >= 0,
          "filter thresholds must be non-negative");
  require(!data.interactions.empty(), "cannot filter an empty dataset");
  std::vector<Interaction> kept = data.interactions;
  std::vector<int> user_deg(data.num_users), item_deg(data.num_items);
  for (;;) {
    std::fill(user_deg.begin(), user_deg.end(), 0);
    std::fill(item_deg.begin(), item_deg.end(), 0);
    for (const Interaction& e : kept) {
      ++user_deg[e.user];
      ++item_deg[e.item];
    }
    std::vector<Interaction> next;
    next.reserve(kept.size());
    for (const Interaction& e : kept) {
      const bool user_ok = user_deg[e.user] >= min_user_interactions;
      const bool item_ok = item_deg[e.item] >= min_item_interactions;
      if (user_ok && item_ok) next.push_back(e);
    }
    const bool stable = next.size() == kept.size();
    kept = std::move(next);
    if (stable) break;
    if (kept.empty()) throw DataError("long-tail filtering removed all interactions");
  }
  return reindex_dataset(data, kept);
}

// --- split-manifest files -------------------------------------------------
//
// A prepared dataset directory holds train/validation/test interaction files
// (raw ids, so each file is itself parseable as an interaction log) plus one
// vocab file per side mapping raw id -> dense index.

inline void write_interactions_file(const std::string& path,
                                    const InteractionDataset& universe,
                                    const std::vector<Interaction>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const Interaction& e : rows)
    out << universe.user_ids[e.user] << '\t' << universe.item_ids[e.item]
        << '\n';
  if (!out) throw DataError("failed writing file: " + path);
}

inline void write_vocab_file(const std::string& path,
                             const std::vector<std::string>& ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (std::size_t i = 0; i < ids.size(); ++i)
    out << ids[i] << '\t' << i << '\n';
  if (!out) throw DataError("failed writing file: " + path);
}

inline std::vector<std::string> read_vocab_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocab file: " + path);
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": malformed vocab line");
    const std::size_t index = std::stoull(line.substr(tab + 1));
    if (index != ids.size())
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": vocab indices must be dense and in order");
    ids.push_back(line.substr(0, tab));
  }
  return ids;
}

}  // namespace buir
