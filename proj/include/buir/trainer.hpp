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

// Training loops. One epoch is a full shuffled pass over the training pairs
// in consecutive batches; the shuffle order and every per-step random draw
// (augmentation masks, negative samples) derive from (seed, epoch, step),
// so a run can be stopped and resumed bit-exactly from its saved progress.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "buir/adjacency.hpp"
#include "buir/bpr.hpp"
#include "buir/buir.hpp"
#include "buir/checkpoint.hpp"
#include "buir/metrics.hpp"
#include "buir/random.hpp"
#include "buir/split.hpp"

namespace buir {

struct TrainLogEntry {
  int epoch = 0;
  double loss = 0.0;
  double val_p10 = 0.0;
};

struct TrainResult {
  Checkpoint best;
  Checkpoint final;
  int best_epoch = 0;
  double best_val_p10 = 0.0;
  std::vector<TrainLogEntry> log;
};

namespace detail {

// Epoch/step bookkeeping shared by both trainers.
struct StepCursor {
  std::size_t num_pairs = 0;
  std::size_t batch_size = 0;

  std::size_t steps_per_epoch() const {
    return (num_pairs + batch_size - 1) / batch_size;
  }
  std::pair<std::size_t, std::size_t> batch_range(std::size_t step) const {
    const std::size_t begin = step * batch_size;
    return {begin, std::min(begin + batch_size, num_pairs)};
  }
};

}  // namespace detail

// Dual-encoder trainer. Owns the model, the optimizer moments, and the
// training-loop position; `step()` advances exactly one optimizer step.
class BuirTrainer {
 public:
  BuirTrainer(BuirModel model, const TrainConfig& tcfg,
              const OptimizerConfig& ocfg, const InteractionDataset& train,
              int eval_threads = 1)
      : model_(std::move(model)),
        tcfg_(tcfg),
        ocfg_(ocfg),
        train_pairs_(train.interactions),
        adj_(build_adjacency(train)),
        train_items_(per_user_train_items(train)),
        eval_threads_(eval_threads),
        shuffle_seed_(derive_seed(tcfg.seed, kShuffleSeed)),
        aug_seed_(derive_seed(tcfg.seed, kAugmentSeed)) {
    require(!train_pairs_.empty(), "training split is empty");
    progress_.opt = make_opt_state(model_);
    progress_.early.patience = tcfg.early_stop_patience;
    cursor_ = {train_pairs_.size(),
               static_cast<std::size_t>(std::max(1, tcfg.batch_size))};
  }

  const BuirModel& model() const { return model_; }
  const BipartiteAdjacency& adjacency() const { return adj_; }
  TrainProgress& progress() { return progress_; }
  const TrainProgress& progress() const { return progress_; }
  std::size_t steps_per_epoch() const { return cursor_.steps_per_epoch(); }

  // Mean pair loss of the executed batch.
  double step() {
    ensure_epoch_order();
    const auto [begin, end] =
        cursor_.batch_range(progress_.steps_done_in_epoch);
    Rng aug_rng =
        make_rng(aug_seed_, progress_.epochs_done, progress_.steps_done_in_epoch);
    const double loss = buir_train_step(
        model_, std::span<const Interaction>(epoch_order_).subspan(begin, end - begin),
        progress_.opt, tcfg_, ocfg_, &adj_, aug_rng);
    advance_cursor();
    return loss;
  }

  double run_epoch() { return run_until_epoch_end(); }

  MetricsReport evaluate(const EvalConfig& cfg, const DatasetSplit& split) const {
    const PairScorer scorer = make_scorer(model_, &adj_);
    return evaluate_ranking(
        [&](int u, std::span<double> out) { scorer.score_items_for_user(u, out); },
        model_.num_items(), train_items_, split, cfg, eval_threads_);
  }

  Checkpoint checkpoint() const {
    return to_checkpoint(model_, tcfg_.momentum_tau);
  }

  void restore(const Checkpoint& cp, const TrainProgress& progress) {
    model_ = buir_from_checkpoint(cp);
    progress_ = progress;
    epoch_order_.clear();
  }

 private:
  void ensure_epoch_order() {
    if (!epoch_order_.empty()) return;
    epoch_order_ = train_pairs_;
    Rng rng = make_rng(shuffle_seed_, progress_.epochs_done);
    shuffle_span(rng, std::span<Interaction>(epoch_order_));
  }

  void advance_cursor() {
    if (++progress_.steps_done_in_epoch >= cursor_.steps_per_epoch()) {
      ++progress_.epochs_done;
      progress_.steps_done_in_epoch = 0;
      epoch_order_.clear();
    }
  }

  double run_until_epoch_end() {
    const std::uint64_t epoch = progress_.epochs_done;
    double weighted = 0.0;
    std::size_t pairs = 0;
    while (progress_.epochs_done == epoch) {
      const auto [begin, end] =
          cursor_.batch_range(progress_.steps_done_in_epoch);
      weighted += step() * static_cast<double>(end - begin);
      pairs += end - begin;
    }
    return weighted / static_cast<double>(pairs);
  }

  BuirModel model_;
  TrainConfig tcfg_;
  OptimizerConfig ocfg_;
  std::vector<Interaction> train_pairs_;
  BipartiteAdjacency adj_;
  std::vector<std::vector<int>> train_items_;
  int eval_threads_;
  std::uint64_t shuffle_seed_;
  std::uint64_t aug_seed_;
  TrainProgress progress_;
  detail::StepCursor cursor_;
  std::vector<Interaction> epoch_order_;
};

// Pairwise-ranking baseline trainer with the same stepping contract.
class BprTrainer {
 public:
  BprTrainer(BprModel model, const TrainConfig& tcfg,
             const OptimizerConfig& ocfg, const SamplerConfig& scfg,
             const InteractionDataset& train, int eval_threads = 1)
      : model_(std::move(model)),
        tcfg_(tcfg),
        ocfg_(ocfg),
        train_pairs_(train.interactions),
        adj_(build_adjacency(train)),
        train_items_(per_user_train_items(train)),
        eval_threads_(eval_threads),
        shuffle_seed_(derive_seed(tcfg.seed, kShuffleSeed)),
        sampler_seed_(derive_seed(tcfg.seed, kSamplerSeed)),
        sampler_(adj_, scfg) {
    require(!train_pairs_.empty(), "training split is empty");
    progress_.opt = make_opt_state(model_);
    progress_.early.patience = tcfg.early_stop_patience;
    cursor_ = {train_pairs_.size(),
               static_cast<std::size_t>(std::max(1, tcfg.batch_size))};
  }

  // The sampler points into this object's adjacency; pinning the trainer in
  // place keeps that reference valid.
  BprTrainer(const BprTrainer&) = delete;
  BprTrainer& operator=(const BprTrainer&) = delete;

  const BprModel& model() const { return model_; }
  TrainProgress& progress() { return progress_; }
  const TrainProgress& progress() const { return progress_; }
  std::size_t steps_per_epoch() const { return cursor_.steps_per_epoch(); }

  double step() {
    ensure_epoch_order();
    const auto [begin, end] =
        cursor_.batch_range(progress_.steps_done_in_epoch);
    Rng rng = make_rng(sampler_seed_, progress_.epochs_done,
                       progress_.steps_done_in_epoch);
    const double loss = bpr_train_step(
        model_, std::span<const Interaction>(epoch_order_).subspan(begin, end - begin),
        sampler_, progress_.opt, ocfg_, rng);
    if (++progress_.steps_done_in_epoch >= cursor_.steps_per_epoch()) {
      ++progress_.epochs_done;
      progress_.steps_done_in_epoch = 0;
      epoch_order_.clear();
    }
    return loss;
  }

  double run_epoch() {
    const std::uint64_t epoch = progress_.epochs_done;
    double weighted = 0.0;
    std::size_t pairs = 0;
    while (progress_.epochs_done == epoch) {
      const auto [begin, end] =
          cursor_.batch_range(progress_.steps_done_in_epoch);
      weighted += step() * static_cast<double>(end - begin);
      pairs += end - begin;
    }
    return weighted / static_cast<double>(pairs);
  }

  MetricsReport evaluate(const EvalConfig& cfg, const DatasetSplit& split) const {
    const PairScorer scorer = make_scorer(model_);
    return evaluate_ranking(
        [&](int u, std::span<double> out) { scorer.score_items_for_user(u, out); },
        model_.num_items(), train_items_, split, cfg, eval_threads_);
  }

  Checkpoint checkpoint() const { return to_checkpoint(model_); }

  void restore(const Checkpoint& cp, const TrainProgress& progress) {
    model_ = bpr_from_checkpoint(cp);
    progress_ = progress;
    epoch_order_.clear();
  }

 private:
  void ensure_epoch_order() {
    if (!epoch_order_.empty()) return;
    epoch_order_ = train_pairs_;
    Rng rng = make_rng(shuffle_seed_, progress_.epochs_done);
    shuffle_span(rng, std::span<Interaction>(epoch_order_));
  }

  BprModel model_;
  TrainConfig tcfg_;
  OptimizerConfig ocfg_;
  std::vector<Interaction> train_pairs_;
  BipartiteAdjacency adj_;
  std::vector<std::vector<int>> train_items_;
  int eval_threads_;
  std::uint64_t shuffle_seed_;
  std::uint64_t sampler_seed_;
  TrainProgress progress_;
  detail::StepCursor cursor_;
  std::vector<Interaction> epoch_order_;
  NegativeSampler sampler_;
};

// Epoch loop with per-epoch validation, early stopping on validation P@10,
// and best-epoch snapshotting. The returned best checkpoint is the model at
// the epoch that achieved the best validation metric (the initial model if
// max_epochs is 0 or validation never produces a finite improvement).
template <class Trainer>
TrainResult run_training(
    Trainer& trainer, const DatasetSplit& split, int max_epochs,
    const std::function<void(const TrainLogEntry&)>& on_epoch = {}) {
  TrainResult result;
  result.best = trainer.checkpoint();
  EvalConfig val_cfg;
  val_cfg.k_values = {10};
  val_cfg.phase = EvalPhase::kValidation;
  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    const double loss = trainer.run_epoch();
    const MetricsReport rep = trainer.evaluate(val_cfg, split);
    const double p10 = rep.users_evaluated > 0 ? rep.precision_at(10) : 0.0;
    result.log.push_back({epoch, loss, p10});
    if (on_epoch) on_epoch(result.log.back());
    const EarlyStopDecision decision =
        early_stop_update(trainer.progress().early, p10);
    if (decision == EarlyStopDecision::kImproved)
      result.best = trainer.checkpoint();
    if (decision == EarlyStopDecision::kStop) break;
  }
  const EarlyStopState& early = trainer.progress().early;
  result.best_epoch = early.best_epoch;
  result.best_val_p10 =
      std::isfinite(early.best_metric) ? early.best_metric : 0.0;
  result.final = trainer.checkpoint();
  return result;
}

}  // namespace buir
