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

// Top-K ranking evaluation under the all-item protocol: every item the user
// has not already seen is a candidate, sampled shortlists are deliberately
// not supported. Metrics are macro-averaged over users with a non-empty
// relevant set.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "buir/common.hpp"
#include "buir/split.hpp"
#include "buir/topk.hpp"

namespace buir {

enum class EvalPhase { kValidation, kTest };

struct EvalConfig {
  std::vector<int> k_values = {10, 20, 50};
  EvalPhase phase = EvalPhase::kValidation;
};

struct MetricsReport {
  std::vector<int> k_values;
  std::vector<double> precision;  // one mean per K
  std::vector<double> ndcg;
  std::size_t users_evaluated = 0;
  std::size_t users_skipped = 0;  // empty relevant set in the target phase
  std::uint64_t seed = 0;

  double precision_at(int k) const { return metric_at(precision, k); }
  double ndcg_at(int k) const { return metric_at(ndcg, k); }

 private:
  double metric_at(const std::vector<double>& values, int k) const {
    for (std::size_t i = 0; i < k_values.size(); ++i)
      if (k_values[i] == k) return values[i];
    throw DataError("metric for requested K was not computed");
  }
};

// |topk ∩ relevant| / K
inline double precision_at_k(std::span<const int> topk,
                             std::span<const int> relevant_sorted, int k) {
  require(static_cast<int>(topk.size()) == k,
          "precision needs exactly K ranked items");
  int hits = 0;
  for (int v : topk)
    if (std::binary_search(relevant_sorted.begin(), relevant_sorted.end(), v))
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

// Binary-relevance NDCG with the ideal DCG truncated at min(|relevant|, K).
inline double ndcg_at_k(std::span<const int> topk,
                        std::span<const int> relevant_sorted, int k) {
  require(static_cast<int>(topk.size()) == k,
          "ndcg needs exactly K ranked items");
  require(!relevant_sorted.empty(), "ndcg is undefined for an empty relevant set");
  double dcg = 0.0;
  for (int i = 0; i < k; ++i) {
    if (std::binary_search(relevant_sorted.begin(), relevant_sorted.end(),
                           topk[i]))
      dcg += 1.0 / std::log2(static_cast<double>(i + 2));
  }
  const int ideal = std::min<int>(static_cast<int>(relevant_sorted.size()), k);
  double idcg = 0.0;
  for (int i = 0; i < ideal; ++i)
    idcg += 1.0 / std::log2(static_cast<double>(i + 2));
  return dcg / idcg;
}

namespace detail {

inline std::vector<int> merge_sorted(std::span<const int> a,
                                     std::span<const int> b) {
  std::vector<int> out;
  out.resize(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
  return out;
}

inline void parallel_over_users(int num_users, int threads,
                                const std::function<void(int)>& body) {
  if (threads <= 1) {
    for (int u = 0; u < num_users; ++u) body(u);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int u = next.fetch_add(1);
        if (u >= num_users) return;
        body(u);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Evaluates an arbitrary scorer under the all-item protocol. Validation
// candidates exclude the user's training items; test candidates additionally
// exclude validation items. Per-user work is independent and runs on
// `threads` workers; the final averages are reduced in user order, so the
// result does not depend on the thread count.
template <class ScoreAllFn>
MetricsReport evaluate_ranking(ScoreAllFn&& score_all, int num_items,
                               const std::vector<std::vector<int>>& train_items,
                               const DatasetSplit& split,
                               const EvalConfig& cfg, int threads = 1) {
  const int num_users = static_cast<int>(train_items.size());
  const auto& ks = cfg.k_values;
  require(!ks.empty(), "evaluation needs at least one metric cutoff");
  for (int k : ks) require(k >= 1, "metric cutoffs must be at least 1");
  const int max_k = *std::max_element(ks.begin(), ks.end());

  MetricsReport report;
  report.k_values = ks;
  report.precision.assign(ks.size(), 0.0);
  report.ndcg.assign(ks.size(), 0.0);

  // Per-user metric rows, reduced sequentially afterwards.
  Matrix prec(num_users, ks.size());
  Matrix gain(num_users, ks.size());
  std::vector<std::uint8_t> counted(num_users, 0);

  detail::parallel_over_users(
      num_users, threads, [&](int u) {
        const std::vector<int>& relevant = cfg.phase == EvalPhase::kValidation
                                               ? split.validation[u]
                                               : split.test[u];
        if (relevant.empty()) return;
        std::vector<int> excluded =
            cfg.phase == EvalPhase::kValidation
                ? train_items[u]
                : detail::merge_sorted(train_items[u], split.validation[u]);
        if (num_items - static_cast<int>(excluded.size()) < max_k) return;
        std::vector<double> scores(num_items);
        score_all(u, std::span<double>(scores));
        const std::vector<ScoredItem> ranked =
            select_top_k(scores, excluded, max_k);
        std::vector<int> ranked_ids(max_k);
        for (int i = 0; i < max_k; ++i) ranked_ids[i] = ranked[i].item;
        for (std::size_t j = 0; j < ks.size(); ++j) {
          const std::span<const int> prefix(ranked_ids.data(),
                                            static_cast<std::size_t>(ks[j]));
          prec.at(u, j) = precision_at_k(prefix, relevant, ks[j]);
          gain.at(u, j) = ndcg_at_k(prefix, relevant, ks[j]);
        }
        counted[u] = 1;
      });

  for (int u = 0; u < num_users; ++u) {
    if (!counted[u]) {
      ++report.users_skipped;
      continue;
    }
    ++report.users_evaluated;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      report.precision[j] += prec.at(u, j);
      report.ndcg[j] += gain.at(u, j);
    }
  }
  if (report.users_evaluated > 0) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
      report.precision[j] /= static_cast<double>(report.users_evaluated);
      report.ndcg[j] /= static_cast<double>(report.users_evaluated);
    }
  }
  return report;
}

inline std::vector<std::vector<int>> per_user_train_items(
    const InteractionDataset& train) {
  std::vector<std::vector<int>> items(train.num_users);
  for (const Interaction& e : train.interactions) items[e.user].push_back(e.item);
  for (auto& v : items) std::sort(v.begin(), v.end());
  return items;
}

// Validation-driven early stopping. An epoch counts as improving only when
// the metric is strictly greater than the best seen; ties consume patience.
// Training stops once the non-improvement streak exceeds the patience.
struct EarlyStopState {
  double best_metric = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs_since_best = 0;
  int patience = 50;
  int epoch = 0;

  bool operator==(const EarlyStopState&) const = default;
};

enum class EarlyStopDecision { kContinue, kStop, kImproved };

inline EarlyStopDecision early_stop_update(EarlyStopState& state,
                                           double metric) {
  ++state.epoch;
  if (metric > state.best_metric) {
    state.best_metric = metric;
    state.best_epoch = state.epoch;
    state.epochs_since_best = 0;
    return EarlyStopDecision::kImproved;
  }
  ++state.epochs_since_best;
  return state.epochs_since_best > state.patience ? EarlyStopDecision::kStop
                                                  : EarlyStopDecision::kContinue;
}

}  // namespace buir
