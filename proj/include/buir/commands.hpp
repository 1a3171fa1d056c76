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

// Implementations behind the CLI subcommands. The binary in tools/ only
// parses flags and forwards here, so every command is also callable (and
// testable) in-process.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "buir/checkpoint.hpp"
#include "buir/common.hpp"
#include "buir/dataset.hpp"
#include "buir/metrics.hpp"
#include "buir/split.hpp"
#include "buir/trainer.hpp"

namespace buir {

// Model selection and hyperparameters, shared between `train` and the two
// sides of `compare`.
struct ModelOptions {
  std::string model = "buir_id";  // buir_id | buir_nb | bpr | bpr_cross
  int dim = 64;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double tau = 0.995;
  int layers = 2;
  double max_drop_prob = 1.0;
  std::string sampler = "uniform";  // uniform | static_global | adaptive_contextual
  int negatives = 1;
  int candidate_pool = 32;
  int batch_size = 1024;
  int epochs = 500;
  int patience = 50;
};

namespace cli_detail {

inline bool is_buir_name(const std::string& model) {
  return model == "buir_id" || model == "buir_nb";
}

inline TrainConfig to_train_config(const ModelOptions& m, std::uint64_t seed) {
  TrainConfig t;
  t.momentum_tau = m.tau;
  t.batch_size = m.batch_size;
  t.max_epochs = m.epochs;
  t.early_stop_patience = m.patience;
  t.seed = seed;
  t.augment.max_drop_probability = m.max_drop_prob;
  t.augment.enabled = m.max_drop_prob > 0.0;
  return t;
}

inline OptimizerConfig to_opt_config(const ModelOptions& m) {
  OptimizerConfig o;
  o.learning_rate = m.lr;
  o.weight_decay = m.weight_decay;
  return o;
}

inline SamplerConfig to_sampler_config(const ModelOptions& m) {
  SamplerConfig s;
  if (m.sampler == "uniform") {
    s.strategy = SamplerStrategy::kUniform;
  } else if (m.sampler == "static_global" || m.sampler == "popularity") {
    s.strategy = SamplerStrategy::kStaticGlobal;
  } else if (m.sampler == "adaptive_contextual" || m.sampler == "adaptive") {
    s.strategy = SamplerStrategy::kAdaptiveContextual;
  } else {
    throw DataError("unknown sampler strategy: " + m.sampler);
  }
  s.negatives_per_positive = m.negatives;
  s.candidate_pool = m.candidate_pool;
  return s;
}

// Builds the requested trainer and hands it to `fn`; both trainer types
// satisfy the same stepping/evaluation interface.
template <class Fn>
void with_trainer(const ModelOptions& m, std::uint64_t seed,
                  const DatasetSplit& split, int threads, Fn&& fn) {
  const TrainConfig tcfg = to_train_config(m, seed);
  const OptimizerConfig ocfg = to_opt_config(m);
  const std::uint64_t init_seed = derive_seed(seed, kInitSeed);
  if (is_buir_name(m.model)) {
    const EncoderKind kind =
        m.model == "buir_nb" ? EncoderKind::kLgcn : EncoderKind::kId;
    BuirModel model =
        init_buir_model(split.train.num_users, split.train.num_items, m.dim,
                        kind, LgcnConfig{m.layers}, init_seed);
    BuirTrainer trainer(std::move(model), tcfg, ocfg, split.train, threads);
    fn(trainer);
  } else if (m.model == "bpr" || m.model == "bpr_cross") {
    const ScoreMode mode = m.model == "bpr_cross" ? ScoreMode::kCrossPrediction
                                                  : ScoreMode::kInnerProduct;
    BprModel model = init_bpr_model(split.train.num_users,
                                    split.train.num_items, m.dim, mode,
                                    init_seed);
    BprTrainer trainer(std::move(model), tcfg, ocfg, to_sampler_config(m),
                       split.train, threads);
    fn(trainer);
  } else {
    throw DataError("unknown model kind: " + m.model);
  }
}

inline PairScorer scorer_from_checkpoint(const Checkpoint& cp,
                                         const BipartiteAdjacency& adj) {
  if (is_buir(cp.kind)) {
    const BuirModel m = buir_from_checkpoint(cp);
    return make_scorer(m, &adj);
  }
  const BprModel m = bpr_from_checkpoint(cp);
  return make_scorer(m);
}

inline void check_checkpoint_matches_split(const Checkpoint& cp,
                                           const DatasetSplit& split,
                                           const std::string& path) {
  if (cp.num_users != static_cast<std::uint64_t>(split.train.num_users) ||
      cp.num_items != static_cast<std::uint64_t>(split.train.num_items))
    throw DataError("checkpoint " + path +
                    " does not match the split dimensions");
}

}  // namespace cli_detail

// ---------------------------------------------------------------------------
// prepare

struct PrepareArgs {
  std::string input;
  std::string out_dir = "prepared";
  int min_user_interactions = 0;
  int min_item_interactions = 0;
  double beta = 0.5;
  int min_train_per_user = 1;
  std::uint64_t seed = 0;
};

struct PrepareSummary {
  int num_users = 0;
  int num_items = 0;
  std::size_t num_interactions = 0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  std::size_t test_size = 0;
};

inline PrepareSummary cmd_prepare(const PrepareArgs& args) {
  InteractionDataset data = parse_interactions(args.input);
  if (args.min_user_interactions > 0 || args.min_item_interactions > 0)
    data = filter_long_tail(data, args.min_user_interactions,
                            args.min_item_interactions);
  SplitConfig scfg;
  scfg.train_ratio = args.beta;
  scfg.min_train_per_user = args.min_train_per_user;
  scfg.seed = derive_seed(args.seed, kSplitSeed);
  const DatasetSplit split = split_per_user(data, scfg);
  save_split(args.out_dir, split);

  PrepareSummary s;
  s.num_users = data.num_users;
  s.num_items = data.num_items;
  s.num_interactions = data.interactions.size();
  s.train_size = split.train.interactions.size();
  for (const auto& v : split.validation) s.validation_size += v.size();
  for (const auto& v : split.test) s.test_size += v.size();
  return s;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data_dir;
  std::string out_dir = "run";
  ModelOptions model;
  std::uint64_t seed = 0;
  int threads = 1;
  bool quiet = false;
};

struct TrainOutput {
  TrainResult result;
  TrainProgress progress;
  std::string best_checkpoint_path;
  std::string final_checkpoint_path;
  std::string state_path;
  std::string log_path;
};

inline TrainOutput cmd_train(const TrainArgs& args) {
  namespace fs = std::filesystem;
  const DatasetSplit split = load_split(args.data_dir);
  fs::create_directories(args.out_dir);

  TrainOutput out;
  const auto on_epoch = [&](const TrainLogEntry& e) {
    if (!args.quiet)
      std::cout << "epoch " << e.epoch << "\tloss " << e.loss << "\tval_p10 "
                << e.val_p10 << std::endl;
  };
  cli_detail::with_trainer(
      args.model, args.seed, split, args.threads, [&](auto& trainer) {
        out.result = run_training(trainer, split, args.model.epochs, on_epoch);
        out.progress = trainer.progress();
      });

  out.best_checkpoint_path = args.out_dir + "/checkpoint_best.bin";
  out.final_checkpoint_path = args.out_dir + "/checkpoint_final.bin";
  out.state_path = args.out_dir + "/train_state.bin";
  out.log_path = args.out_dir + "/train_log.tsv";
  save_checkpoint(out.best_checkpoint_path, out.result.best);
  save_checkpoint(out.final_checkpoint_path, out.result.final);
  save_train_progress(out.state_path, out.progress);

  std::ofstream log(out.log_path);
  if (!log) throw DataError("cannot write training log: " + out.log_path);
  log << "epoch\tloss\tval_p10\n";
  for (const TrainLogEntry& e : out.result.log)
    log << e.epoch << '\t' << e.loss << '\t' << e.val_p10 << '\n';
  if (!args.quiet)
    std::cout << "best epoch " << out.result.best_epoch << " (val_p10 "
              << out.result.best_val_p10 << ") -> "
              << out.best_checkpoint_path << '\n';
  return out;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::vector<std::string> checkpoints;
  std::string data_dir;
  std::string out_dir;
  std::vector<int> k_values = {10, 20, 50};
  int threads = 1;
};

struct EvaluateOutput {
  std::vector<MetricsReport> per_run;
  std::vector<double> precision_mean, precision_std;
  std::vector<double> ndcg_mean, ndcg_std;
  std::string report_path;       // machine-readable table
  std::string report_text_path;  // one metric per line, diff-friendly
};

inline EvaluateOutput cmd_evaluate(const EvaluateArgs& args) {
  require(!args.checkpoints.empty(), "evaluate needs at least one checkpoint");
  const DatasetSplit split = load_split(args.data_dir);
  const BipartiteAdjacency adj = build_adjacency(split.train);
  const std::vector<std::vector<int>> train_items =
      per_user_train_items(split.train);

  EvalConfig cfg;
  cfg.k_values = args.k_values;
  cfg.phase = EvalPhase::kTest;

  EvaluateOutput out;
  for (std::size_t i = 0; i < args.checkpoints.size(); ++i) {
    const Checkpoint cp = load_checkpoint(args.checkpoints[i]);
    cli_detail::check_checkpoint_matches_split(cp, split, args.checkpoints[i]);
    const PairScorer scorer = cli_detail::scorer_from_checkpoint(cp, adj);
    MetricsReport rep = evaluate_ranking(
        [&](int u, std::span<double> s) { scorer.score_items_for_user(u, s); },
        split.train.num_items, train_items, split, cfg, args.threads);
    rep.seed = i;
    out.per_run.push_back(std::move(rep));
  }

  const std::size_t nk = args.k_values.size();
  const auto runs = static_cast<double>(out.per_run.size());
  out.precision_mean.assign(nk, 0.0);
  out.precision_std.assign(nk, 0.0);
  out.ndcg_mean.assign(nk, 0.0);
  out.ndcg_std.assign(nk, 0.0);
  // Mean is computed relative to the first run, so identical runs aggregate
  // to exactly their value with exactly zero spread.
  for (std::size_t j = 0; j < nk; ++j) {
    double dp_sum = 0.0, dn_sum = 0.0;
    for (const MetricsReport& r : out.per_run) {
      dp_sum += r.precision[j] - out.per_run[0].precision[j];
      dn_sum += r.ndcg[j] - out.per_run[0].ndcg[j];
    }
    out.precision_mean[j] = out.per_run[0].precision[j] + dp_sum / runs;
    out.ndcg_mean[j] = out.per_run[0].ndcg[j] + dn_sum / runs;
    for (const MetricsReport& r : out.per_run) {
      const double dp = r.precision[j] - out.precision_mean[j];
      const double dn = r.ndcg[j] - out.ndcg_mean[j];
      out.precision_std[j] += dp * dp;
      out.ndcg_std[j] += dn * dn;
    }
    out.precision_std[j] = std::sqrt(out.precision_std[j] / runs);
    out.ndcg_std[j] = std::sqrt(out.ndcg_std[j] / runs);
  }

  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    out.report_path = args.out_dir + "/report.tsv";
    std::ofstream rep(out.report_path);
    if (!rep) throw DataError("cannot write report: " + out.report_path);
    rep << "metric\tK\tmean\tstd";
    for (std::size_t i = 0; i < out.per_run.size(); ++i) rep << "\trun" << i;
    rep << '\n';
    for (std::size_t j = 0; j < nk; ++j) {
      rep << "P\t" << args.k_values[j] << '\t' << out.precision_mean[j] << '\t'
          << out.precision_std[j];
      for (const MetricsReport& r : out.per_run) rep << '\t' << r.precision[j];
      rep << '\n';
    }
    for (std::size_t j = 0; j < nk; ++j) {
      rep << "N\t" << args.k_values[j] << '\t' << out.ndcg_mean[j] << '\t'
          << out.ndcg_std[j];
      for (const MetricsReport& r : out.per_run) rep << '\t' << r.ndcg[j];
      rep << '\n';
    }

    out.report_text_path = args.out_dir + "/report.txt";
    std::ofstream txt(out.report_text_path);
    if (!txt) throw DataError("cannot write report: " + out.report_text_path);
    const auto emit = [&](const char* metric, const std::vector<double>& mean,
                          const std::vector<double>& std_dev, bool ndcg) {
      for (std::size_t j = 0; j < nk; ++j) {
        txt << metric << '@' << args.k_values[j] << " mean=" << mean[j]
            << " std=" << std_dev[j] << " runs=";
        for (std::size_t i = 0; i < out.per_run.size(); ++i)
          txt << (i > 0 ? "," : "")
              << (ndcg ? out.per_run[i].ndcg[j] : out.per_run[i].precision[j]);
        txt << '\n';
      }
    };
    emit("P", out.precision_mean, out.precision_std, false);
    emit("N", out.ndcg_mean, out.ndcg_std, true);
  }
  return out;
}

// ---------------------------------------------------------------------------
// recommend

struct RecommendArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string out_dir;  // empty -> stdout only
  std::vector<std::string> users;
  int k = 10;
};

struct Recommendation {
  std::string user;
  std::vector<ScoredItem> items;
};

inline std::vector<Recommendation> cmd_recommend(const RecommendArgs& args) {
  const DatasetSplit split = load_split(args.data_dir);
  const BipartiteAdjacency adj = build_adjacency(split.train);
  const Checkpoint cp = load_checkpoint(args.checkpoint);
  cli_detail::check_checkpoint_matches_split(cp, split, args.checkpoint);
  const PairScorer scorer = cli_detail::scorer_from_checkpoint(cp, adj);
  const std::vector<std::vector<int>> train_items =
      per_user_train_items(split.train);

  std::vector<Recommendation> recs;
  for (const std::string& raw : args.users) {
    const auto it = split.train.user_vocab.find(raw);
    if (it == split.train.user_vocab.end())
      throw DataError("unknown user id: " + raw);
    const int u = it->second;
    recs.push_back({raw, recommend_topk(scorer, u, args.k, train_items[u])});
  }

  std::ostream* sink = &std::cout;
  std::ofstream file;
  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    file.open(args.out_dir + "/recommendations.tsv");
    if (!file) throw DataError("cannot write recommendations file");
    sink = &file;
  }
  for (const Recommendation& r : recs)
    for (std::size_t i = 0; i < r.items.size(); ++i)
      *sink << r.user << '\t' << i + 1 << '\t'
            << split.train.item_ids[r.items[i].item] << '\t'
            << r.items[i].score << '\n';
  return recs;
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
  ModelOptions model_a;
  ModelOptions model_b;
  std::string data_dir;
  std::string out_dir;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<int> k_values = {10, 20, 50};
  int threads = 1;
  bool quiet = false;
};

struct CompareOutput {
  // Mean test metrics per K, then deltas (side A minus side B).
  std::vector<double> precision_a, precision_b, precision_delta;
  std::vector<double> ndcg_a, ndcg_b, ndcg_delta;
  std::vector<MetricsReport> runs_a, runs_b;
  std::string report_path;
};

inline CompareOutput cmd_compare(const CompareArgs& args) {
  require(!args.seeds.empty(), "compare needs at least one seed");
  const DatasetSplit split = load_split(args.data_dir);

  EvalConfig cfg;
  cfg.k_values = args.k_values;
  cfg.phase = EvalPhase::kTest;

  CompareOutput out;
  auto run_side = [&](const ModelOptions& m, std::vector<MetricsReport>& sink,
                      const char* label) {
    for (const std::uint64_t seed : args.seeds) {
      MetricsReport rep;
      cli_detail::with_trainer(m, seed, split, args.threads,
                               [&](auto& trainer) {
                                 run_training(trainer, split, m.epochs);
                                 rep = trainer.evaluate(cfg, split);
                               });
      rep.seed = seed;
      if (!args.quiet)
        std::cout << label << " seed " << seed << ": P@" << args.k_values[0]
                  << " = " << rep.precision[0] << '\n';
      sink.push_back(std::move(rep));
    }
  };
  run_side(args.model_a, out.runs_a, "A");
  run_side(args.model_b, out.runs_b, "B");

  const std::size_t nk = args.k_values.size();
  const auto runs = static_cast<double>(args.seeds.size());
  out.precision_a.assign(nk, 0.0);
  out.precision_b.assign(nk, 0.0);
  out.ndcg_a.assign(nk, 0.0);
  out.ndcg_b.assign(nk, 0.0);
  for (std::size_t j = 0; j < nk; ++j) {
    for (const MetricsReport& r : out.runs_a) {
      out.precision_a[j] += r.precision[j] / runs;
      out.ndcg_a[j] += r.ndcg[j] / runs;
    }
    for (const MetricsReport& r : out.runs_b) {
      out.precision_b[j] += r.precision[j] / runs;
      out.ndcg_b[j] += r.ndcg[j] / runs;
    }
  }
  out.precision_delta.resize(nk);
  out.ndcg_delta.resize(nk);
  for (std::size_t j = 0; j < nk; ++j) {
    out.precision_delta[j] = out.precision_a[j] - out.precision_b[j];
    out.ndcg_delta[j] = out.ndcg_a[j] - out.ndcg_b[j];
  }

  if (!args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    out.report_path = args.out_dir + "/compare.tsv";
    std::ofstream rep(out.report_path);
    if (!rep) throw DataError("cannot write report: " + out.report_path);
    rep << "metric\tK\tmodel_a\tmodel_b\tdelta";
    for (const std::uint64_t s : args.seeds) rep << "\ta_seed" << s;
    for (const std::uint64_t s : args.seeds) rep << "\tb_seed" << s;
    rep << '\n';
    for (std::size_t j = 0; j < nk; ++j) {
      rep << "P\t" << args.k_values[j] << '\t' << out.precision_a[j] << '\t'
          << out.precision_b[j] << '\t' << out.precision_delta[j];
      for (const MetricsReport& r : out.runs_a) rep << '\t' << r.precision[j];
      for (const MetricsReport& r : out.runs_b) rep << '\t' << r.precision[j];
      rep << '\n';
    }
    for (std::size_t j = 0; j < nk; ++j) {
      rep << "N\t" << args.k_values[j] << '\t' << out.ndcg_a[j] << '\t'
          << out.ndcg_b[j] << '\t' << out.ndcg_delta[j];
      for (const MetricsReport& r : out.runs_a) rep << '\t' << r.ndcg[j];
      for (const MetricsReport& r : out.runs_b) rep << '\t' << r.ndcg[j];
      rep << '\n';
    }
  }
  return out;
}

}  // namespace buir
