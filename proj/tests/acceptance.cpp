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

// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned in code next to each check. Expected
// values come from independent oracles (finite differences, brute-force
// ranking, closed-form sampling marginals), never from the code under test.

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "buir/commands.hpp"
#include "buir/trainer.hpp"
#include "support/testing.hpp"

namespace {

using buir::BipartiteAdjacency;
using buir::BprModel;
using buir::BprTriple;
using buir::BuirModel;
using buir::DatasetSplit;
using buir::EmbeddingTable;
using buir::EncoderKind;
using buir::Interaction;
using buir::Rng;

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double max_rel_err(const std::vector<double>& analytic,
                   const std::vector<double>& fd) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    worst = std::max(worst,
                     test_support::relative_error(analytic[i], fd[i], 1e-3));
  return worst;
}

double table_dot(const EmbeddingTable& a, const EmbeddingTable& b) {
  return buir::dot(a.users.data, b.users.data) +
         buir::dot(a.items.data, b.items.data);
}

BipartiteAdjacency random_adjacency(Rng& rng, int users, int items,
                                    double density) {
  buir::InteractionDataset ds;
  ds.num_users = users;
  ds.num_items = items;
  for (int u = 0; u < users; ++u)
    for (int v = 0; v < items; ++v)
      if (buir::uniform_double(rng) < density) ds.interactions.push_back({u, v});
  if (ds.interactions.empty()) ds.interactions.push_back({0, 0});
  return buir::build_adjacency(ds);
}

// ---------------------------------------------------------------------------
// 1. negative-cosine loss vs. squared distance of normalized vectors

Outcome criterion_loss_identity() {
  Outcome out;
  Rng rng = buir::make_rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> a(8), b(8);
    for (double& x : a) x = buir::normal_double(rng);
    for (double& x : b) x = buir::normal_double(rng);
    const double na = buir::norm2(a), nb = buir::norm2(b);
    const double cos = buir::dot(a, b) / (na * nb);
    double l2 = 0.0;
    for (int j = 0; j < 8; ++j) {
      const double d = a[j] / na - b[j] / nb;
      l2 += d * d;
    }
    worst = std::max(worst, std::abs((2.0 - 2.0 * cos) - l2));
  }
  out.expect(worst < 1e-10, "identity gap " + std::to_string(worst));
  return out;
}

// ---------------------------------------------------------------------------
// 2. analytic gradients vs. central finite differences (h = 1e-5)

Outcome criterion_gradients() {
  Outcome out;
  Rng rng = buir::make_rng(2002);
  double worst = 0.0;

  // Dual-encoder with the identity encoder.
  for (int inst = 0; inst < 20; ++inst) {
    BuirModel m = buir::init_buir_model(4, 5, 4, EncoderKind::kId, {}, rng());
    const std::vector<Interaction> batch = {
        {static_cast<int>(buir::uniform_below(rng, 4)),
         static_cast<int>(buir::uniform_below(rng, 5))},
        {static_cast<int>(buir::uniform_below(rng, 4)),
         static_cast<int>(buir::uniform_below(rng, 5))}};
    const buir::BuirGradients g = buir::buir_loss_gradients(batch, m);
    const auto loss = [&] {
      double total = 0.0;
      for (const Interaction& e : batch)
        total += buir_loss(m.online.users.row(e.user),
                           m.online.items.row(e.item),
                           m.target.users.row(e.user),
                           m.target.items.row(e.item), m.predictor);
      return total / static_cast<double>(batch.size());
    };
    worst = std::max(
        worst, max_rel_err(g.user.data, test_support::central_differences(
                                            m.online.users.data, loss)));
    worst = std::max(
        worst, max_rel_err(g.item.data, test_support::central_differences(
                                            m.online.items.data, loss)));
    worst = std::max(worst, max_rel_err(g.pred_weight.data,
                                        test_support::central_differences(
                                            m.predictor.weight.data, loss)));
    worst = std::max(worst,
                     max_rel_err(g.pred_bias, test_support::central_differences(
                                                  m.predictor.bias, loss)));
  }
  out.expect(worst < 1e-4, "id-encoder rel err " + std::to_string(worst));

  // Dual-encoder with the graph encoder on a 4x4 toy graph, 2 layers.
  worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const BipartiteAdjacency adj = random_adjacency(rng, 4, 4, 0.5);
    BuirModel m = buir::init_buir_model(4, 4, 3, EncoderKind::kLgcn,
                                        {.num_layers = 2}, rng());
    buir::AugmentedNeighborhood aug;
    const buir::AugmentedNeighborhood* aug_ptr = nullptr;
    if (inst % 2 == 1) {  // half the instances run on a masked view
      aug = buir::edge_mask_with_drop(adj, 0.3, rng);
      aug_ptr = &aug;
    }
    const std::vector<Interaction> batch = {
        {static_cast<int>(buir::uniform_below(rng, 4)),
         static_cast<int>(buir::uniform_below(rng, 4))}};
    const buir::BuirGradients g =
        buir::buir_loss_gradients(batch, m, &adj, aug_ptr);
    const auto loss = [&] {
      const EmbeddingTable on = buir::encode_lgcn(m.online, adj, m.lgcn, aug_ptr);
      const EmbeddingTable tg = buir::encode_lgcn(m.target, adj, m.lgcn, aug_ptr);
      double total = 0.0;
      for (const Interaction& e : batch)
        total += buir_loss(on.users.row(e.user), on.items.row(e.item),
                           tg.users.row(e.user), tg.items.row(e.item),
                           m.predictor);
      return total / static_cast<double>(batch.size());
    };
    worst = std::max(
        worst, max_rel_err(g.user.data, test_support::central_differences(
                                            m.online.users.data, loss)));
    worst = std::max(
        worst, max_rel_err(g.item.data, test_support::central_differences(
                                            m.online.items.data, loss)));
    worst = std::max(worst, max_rel_err(g.pred_weight.data,
                                        test_support::central_differences(
                                            m.predictor.weight.data, loss)));
    worst = std::max(worst,
                     max_rel_err(g.pred_bias, test_support::central_differences(
                                                  m.predictor.bias, loss)));
  }
  out.expect(worst < 1e-4, "graph-encoder rel err " + std::to_string(worst));

  // Pairwise-ranking baseline, alternating score modes.
  worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const buir::ScoreMode mode = inst % 2 == 0
                                     ? buir::ScoreMode::kInnerProduct
                                     : buir::ScoreMode::kCrossPrediction;
    BprModel m = buir::init_bpr_model(4, 5, 4, mode, rng());
    const int u = static_cast<int>(buir::uniform_below(rng, 4));
    const int pos = static_cast<int>(buir::uniform_below(rng, 5));
    int neg = static_cast<int>(buir::uniform_below(rng, 5));
    if (neg == pos) neg = (neg + 1) % 5;
    const std::vector<BprTriple> triples = {{u, pos, neg}};
    const buir::BprGradients g = buir::bpr_loss_gradients(triples, m);
    const auto loss = [&] {
      return buir::bpr_loss(buir::bpr_score(m, u, pos),
                            buir::bpr_score(m, u, neg));
    };
    worst = std::max(
        worst, max_rel_err(g.user.data, test_support::central_differences(
                                            m.user_matrix.data, loss)));
    worst = std::max(
        worst, max_rel_err(g.item.data, test_support::central_differences(
                                            m.item_matrix.data, loss)));
    if (mode == buir::ScoreMode::kCrossPrediction) {
      worst = std::max(worst, max_rel_err(g.pred_weight.data,
                                          test_support::central_differences(
                                              m.predictor.weight.data, loss)));
      worst = std::max(worst, max_rel_err(g.pred_bias,
                                          test_support::central_differences(
                                              m.predictor.bias, loss)));
    }
  }
  out.expect(worst < 1e-4, "ranking-baseline rel err " + std::to_string(worst));
  return out;
}

// ---------------------------------------------------------------------------
// 3. graph propagation adjoint identity

Outcome criterion_adjoint() {
  Outcome out;
  Rng rng = buir::make_rng(3003);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int users = 2 + static_cast<int>(buir::uniform_below(rng, 24));
    const int items = 2 + static_cast<int>(buir::uniform_below(rng, 24));
    const BipartiteAdjacency adj = random_adjacency(rng, users, items, 0.25);
    const buir::LgcnConfig cfg{
        .num_layers = static_cast<int>(buir::uniform_below(rng, 4))};
    Rng table_rng = buir::make_rng(rng());
    const EmbeddingTable e =
        buir::init_embedding_table(users, items, 5, table_rng);
    const EmbeddingTable g =
        buir::init_embedding_table(users, items, 5, table_rng);
    buir::AugmentedNeighborhood aug;
    const buir::AugmentedNeighborhood* aug_ptr = nullptr;
    if (trial % 2 == 1) {
      aug = buir::edge_mask_with_drop(adj, 0.4, rng);
      aug_ptr = &aug;
    }
    const double lhs = table_dot(buir::encode_lgcn(e, adj, cfg, aug_ptr), g);
    const double rhs =
        table_dot(e, buir::encode_lgcn_backward(g, adj, cfg, aug_ptr));
    const double scale =
        std::sqrt(table_dot(e, e)) * std::sqrt(table_dot(g, g));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(scale, 1e-30));
  }
  out.expect(worst < 1e-10, "adjoint gap " + std::to_string(worst));
  return out;
}

// ---------------------------------------------------------------------------
// 4. exponential-moving-average exactness

Outcome criterion_ema() {
  Outcome out;
  Rng rng = buir::make_rng(4004);
  const buir::InteractionDataset data =
      test_support::planted_block_dataset(12, 14, 2, 0.4, 4);
  const BipartiteAdjacency adj = buir::build_adjacency(data);
  for (const EncoderKind kind : {EncoderKind::kId, EncoderKind::kLgcn}) {
    for (const double tau : {0.995, 0.5, 1.0}) {
      BuirModel m = buir::init_buir_model(data.num_users, data.num_items, 6,
                                          kind, {.num_layers = 2}, rng());
      buir::ModelOptState opt = make_opt_state(m);
      buir::TrainConfig tcfg;
      tcfg.momentum_tau = tau;
      tcfg.augment.max_drop_probability = 0.5;
      const EmbeddingTable target_before = m.target;
      Rng step_rng = buir::make_rng(rng());
      buir::buir_train_step(m, data.interactions, opt, tcfg,
                            buir::OptimizerConfig{}, &adj, step_rng);
      bool exact = true;
      for (std::size_t i = 0; i < m.target.users.data.size(); ++i)
        exact = exact && m.target.users.data[i] ==
                             tau * target_before.users.data[i] +
                                 (1.0 - tau) * m.online.users.data[i];
      for (std::size_t i = 0; i < m.target.items.data.size(); ++i)
        exact = exact && m.target.items.data[i] ==
                             tau * target_before.items.data[i] +
                                 (1.0 - tau) * m.online.items.data[i];
      out.expect(exact, "EMA blend not bit-exact at tau " + std::to_string(tau));
      if (tau == 1.0) {
        out.expect(m.target.users == target_before.users &&
                       m.target.items == target_before.items,
                   "tau = 1 failed to freeze the target");
        out.expect(!(m.online.users == target_before.users),
                   "online encoder did not move");
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 5. non-collapse on the planted-block dataset

Outcome criterion_non_collapse() {
  Outcome out;
  const buir::InteractionDataset data =
      test_support::planted_block_dataset(200, 300, 2, 0.2, 5005);
  const DatasetSplit split =
      buir::split_per_user(data, {.train_ratio = 0.5, .seed = 55});

  buir::TrainConfig tcfg;
  tcfg.momentum_tau = 0.995;
  tcfg.batch_size = 256;
  tcfg.seed = 505;
  tcfg.early_stop_patience = 1000;  // run the full 100 epochs
  BuirModel model = buir::init_buir_model(
      data.num_users, data.num_items, 64, EncoderKind::kId, {},
      buir::derive_seed(tcfg.seed, buir::kInitSeed));
  buir::BuirTrainer trainer(std::move(model), tcfg, buir::OptimizerConfig{},
                            split.train);
  for (int epoch = 0; epoch < 100; ++epoch) trainer.run_epoch();

  // (a) item representations have not collapsed onto one direction
  Rng rng = buir::make_rng(77);
  const buir::Matrix& items = trainer.model().online.items;
  double mean_abs_cos = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int a = static_cast<int>(buir::uniform_below(rng, items.rows));
    int b = static_cast<int>(buir::uniform_below(rng, items.rows));
    while (b == a) b = static_cast<int>(buir::uniform_below(rng, items.rows));
    mean_abs_cos +=
        std::abs(buir::dot(items.row(a), items.row(b)) /
                 (buir::norm2(items.row(a)) * buir::norm2(items.row(b))));
  }
  mean_abs_cos /= 1000.0;
  out.expect(mean_abs_cos < 0.9,
             "mean |cos| " + std::to_string(mean_abs_cos));

  // (b) trained model beats the most-popular-items baseline on test P@10
  buir::EvalConfig cfg;
  cfg.k_values = {10};
  cfg.phase = buir::EvalPhase::kTest;
  const double model_p10 =
      trainer.evaluate(cfg, split).precision_at(10);
  const double popular_p10 =
      test_support::popularity_baseline_precision(split, true, 10);
  out.expect(model_p10 > popular_p10,
             "model P@10 " + std::to_string(model_p10) + " vs popularity " +
                 std::to_string(popular_p10));
  out.detail = "|cos| " + std::to_string(mean_abs_cos) + ", P@10 " +
               std::to_string(model_p10) + " > popularity " +
               std::to_string(popular_p10);
  return out;
}

// ---------------------------------------------------------------------------
// 6. sparse-regime direction: dual encoder vs. uniform pairwise ranking

Outcome criterion_sparse_direction() {
  Outcome out;
  const buir::InteractionDataset data =
      test_support::planted_block_dataset(200, 300, 2, 0.2, 5005);
  const DatasetSplit split =
      buir::split_per_user(data, {.train_ratio = 0.1, .seed = 66});

  buir::EvalConfig cfg;
  cfg.k_values = {10};
  cfg.phase = buir::EvalPhase::kTest;

  const auto evaluate_best = [&](const buir::Checkpoint& best) {
    const BipartiteAdjacency adj = buir::build_adjacency(split.train);
    const auto train_items = buir::per_user_train_items(split.train);
    buir::PairScorer scorer;
    if (buir::is_buir(best.kind)) {
      const BuirModel m = buir::buir_from_checkpoint(best);
      scorer = buir::make_scorer(m, &adj);
    } else {
      const BprModel m = buir::bpr_from_checkpoint(best);
      scorer = buir::make_scorer(m);
    }
    return buir::evaluate_ranking(
               [&](int u, std::span<double> s) {
                 scorer.score_items_for_user(u, s);
               },
               split.train.num_items, train_items, split, cfg)
        .precision_at(10);
  };

  double mean_dual = 0.0, mean_ranking = 0.0;
  for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    buir::TrainConfig tcfg;
    tcfg.batch_size = 256;
    tcfg.seed = seed;
    {
      BuirModel model = buir::init_buir_model(
          data.num_users, data.num_items, 64, EncoderKind::kId, {},
          buir::derive_seed(seed, buir::kInitSeed));
      buir::BuirTrainer trainer(std::move(model), tcfg,
                                buir::OptimizerConfig{}, split.train);
      const buir::TrainResult res = buir::run_training(trainer, split, 100);
      mean_dual += evaluate_best(res.best) / 3.0;
    }
    {
      BprModel model = buir::init_bpr_model(
          data.num_users, data.num_items, 64,
          buir::ScoreMode::kInnerProduct,
          buir::derive_seed(seed, buir::kInitSeed));
      buir::SamplerConfig scfg;  // uniform, one negative per positive
      buir::BprTrainer trainer(std::move(model), tcfg,
                               buir::OptimizerConfig{}, scfg, split.train);
      const buir::TrainResult res = buir::run_training(trainer, split, 100);
      mean_ranking += evaluate_best(res.best) / 3.0;
    }
  }
  out.expect(mean_dual >= mean_ranking,
             "dual-encoder mean P@10 " + std::to_string(mean_dual) +
                 " below ranking baseline " + std::to_string(mean_ranking));
  out.detail = "dual " + std::to_string(mean_dual) + " vs ranking " +
               std::to_string(mean_ranking) + " (3-seed means)";
  return out;
}

// ---------------------------------------------------------------------------
// 7. augmentation keep-rate statistics

Outcome criterion_augmentation_stats() {
  Outcome out;
  Rng graph_rng = buir::make_rng(7007);
  // 500 edges x 200 draws = 1e5 edge decisions.
  buir::InteractionDataset ds;
  ds.num_users = 25;
  ds.num_items = 25;
  std::set<std::pair<int, int>> seen;
  while (seen.size() < 500) {
    const int u = static_cast<int>(buir::uniform_below(graph_rng, 25));
    const int v = static_cast<int>(buir::uniform_below(graph_rng, 25));
    if (seen.insert({u, v}).second) ds.interactions.push_back({u, v});
  }
  const BipartiteAdjacency adj = buir::build_adjacency(ds);

  const double P = 0.8;
  const int draws = 200;
  Rng rng = buir::make_rng(707);
  double mean_keep = 0.0;
  for (int i = 0; i < draws; ++i) {
    const buir::AugmentedNeighborhood aug = buir::sample_augmentation(
        adj, {.max_drop_probability = P, .enabled = true}, rng);
    std::size_t kept = 0;
    for (std::uint8_t k : aug.edge_mask) kept += k;
    mean_keep += static_cast<double>(kept) / 500.0;
  }
  mean_keep /= draws;
  // Binomial mixture: Var(mean) = (Var_p(1-p) + E_p[p(1-p)]/edges) / draws.
  const double var_p = P * P / 12.0;
  const double e_p1p = P / 2.0 - P * P / 3.0;
  const double sigma = std::sqrt((var_p + e_p1p / 500.0) / draws);
  out.expect(std::abs(mean_keep - 0.6) < 3.0 * sigma,
             "keep rate " + std::to_string(mean_keep) + " outside 0.6 +- " +
                 std::to_string(3.0 * sigma));

  const buir::AugmentedNeighborhood none = buir::sample_augmentation(
      adj, {.max_drop_probability = 0.0, .enabled = true}, rng);
  bool all_true = none.drop_probability == 0.0;
  for (std::uint8_t k : none.edge_mask) all_true = all_true && k == 1;
  out.expect(all_true, "P = 0 mask is not all-true");
  out.detail = "keep rate " + std::to_string(mean_keep) + " (target 0.6 +- " +
               std::to_string(3.0 * sigma) + ")";
  return out;
}

// ---------------------------------------------------------------------------
// 8. graph-encoder degeneracies

Outcome criterion_lgcn_degeneracy() {
  Outcome out;
  Rng rng = buir::make_rng(8008);
  const BipartiteAdjacency adj = random_adjacency(rng, 6, 6, 0.4);
  const EmbeddingTable table = buir::init_embedding_table(6, 6, 4, rng);
  const EmbeddingTable zero_layers =
      buir::encode_lgcn(table, adj, {.num_layers = 0});
  out.expect(zero_layers.users == table.users &&
                 zero_layers.items == table.items,
             "zero layers is not the identity");

  // Hand-derived one-layer values on the two-item toy graph.
  buir::InteractionDataset toy;
  toy.num_users = 1;
  toy.num_items = 2;
  toy.interactions = {{0, 0}, {0, 1}};
  const BipartiteAdjacency toy_adj = buir::build_adjacency(toy);
  EmbeddingTable t;
  t.users = buir::Matrix(1, 2);
  t.items = buir::Matrix(2, 2);
  t.users.at(0, 0) = 1.0;
  t.items.at(0, 1) = 1.0;
  t.items.at(1, 0) = 1.0;
  t.items.at(1, 1) = 1.0;
  const EmbeddingTable one = buir::encode_lgcn(t, toy_adj, {.num_layers = 1});
  out.expect(std::abs(one.users.at(0, 0) - 0.85355) < 1e-5 &&
                 std::abs(one.users.at(0, 1) - 0.70711) < 1e-5,
             "toy-graph one-layer values off");

  // Isolated-node rule: no propagation, so the mean is e / (layers + 1).
  buir::InteractionDataset iso;
  iso.num_users = 1;
  iso.num_items = 2;
  iso.interactions = {{0, 0}};
  const BipartiteAdjacency iso_adj = buir::build_adjacency(iso);
  const EmbeddingTable it = buir::init_embedding_table(1, 2, 3, rng);
  const EmbeddingTable iso_out = buir::encode_lgcn(it, iso_adj, {.num_layers = 2});
  bool iso_ok = true;
  for (int j = 0; j < 3; ++j)
    iso_ok = iso_ok &&
             std::abs(iso_out.items.at(1, j) - it.items.at(1, j) / 3.0) < 1e-12;
  out.expect(iso_ok, "isolated-node rule violated");
  return out;
}

// ---------------------------------------------------------------------------
// 9. ranking metrics vs. brute force

Outcome criterion_metric_oracle() {
  Outcome out;
  // The worked example: hits at ranks 1 and 3 with two relevant items.
  const std::vector<int> topk = {1, 9, 3};
  const std::vector<int> relevant = {1, 3};
  out.expect(std::abs(buir::ndcg_at_k(topk, relevant, 3) - 0.91972) < 1e-5,
             "worked NDCG example off");

  Rng rng = buir::make_rng(9009);
  for (int trial = 0; trial < 50; ++trial) {
    const int users = 2 + static_cast<int>(buir::uniform_below(rng, 9));
    const int items = 20;
    const BprModel model = buir::init_bpr_model(
        users, items, 4, buir::ScoreMode::kInnerProduct, rng());
    DatasetSplit split;
    split.train.num_users = users;
    split.train.num_items = items;
    std::vector<std::vector<int>> train_items(users);
    split.validation.resize(users);
    split.test.resize(users);
    for (int u = 0; u < users; ++u)
      for (int v = 0; v < items; ++v) {
        const double r = buir::uniform_double(rng);
        if (r < 0.15)
          train_items[u].push_back(v);
        else if (r < 0.25)
          split.validation[u].push_back(v);
        else if (r < 0.4)
          split.test[u].push_back(v);
      }
    buir::EvalConfig cfg;
    cfg.k_values = {3, 5};
    cfg.phase = trial % 2 == 0 ? buir::EvalPhase::kValidation
                               : buir::EvalPhase::kTest;
    const buir::PairScorer scorer = buir::make_scorer(model);
    const buir::MetricsReport rep = buir::evaluate_ranking(
        [&](int u, std::span<double> s) { scorer.score_items_for_user(u, s); },
        items, train_items, split, cfg);

    double p3 = 0, p5 = 0, n3 = 0, n5 = 0;
    int counted = 0;
    for (int u = 0; u < users; ++u) {
      const auto& rel_list = cfg.phase == buir::EvalPhase::kValidation
                                 ? split.validation[u]
                                 : split.test[u];
      if (rel_list.empty()) continue;
      std::set<int> excluded(train_items[u].begin(), train_items[u].end());
      if (cfg.phase == buir::EvalPhase::kTest)
        excluded.insert(split.validation[u].begin(), split.validation[u].end());
      if (items - static_cast<int>(excluded.size()) < 5) continue;
      std::vector<double> scores(items);
      for (int v = 0; v < items; ++v) {
        scores[v] = 0.0;
        for (int j = 0; j < 4; ++j)
          scores[v] += model.user_matrix.at(u, j) * model.item_matrix.at(v, j);
      }
      const std::vector<int> ranking =
          test_support::brute_force_ranking(scores, excluded);
      const std::set<int> rel(rel_list.begin(), rel_list.end());
      p3 += test_support::brute_force_precision(ranking, rel, 3);
      p5 += test_support::brute_force_precision(ranking, rel, 5);
      n3 += test_support::brute_force_ndcg(ranking, rel, 3);
      n5 += test_support::brute_force_ndcg(ranking, rel, 5);
      ++counted;
    }
    out.expect(rep.users_evaluated == static_cast<std::size_t>(counted),
               "evaluated-user counts disagree");
    if (counted == 0) continue;
    out.expect(rep.precision_at(3) == p3 / counted &&
                   rep.precision_at(5) == p5 / counted,
               "precision means disagree with brute force");
    out.expect(rep.ndcg_at(3) == n3 / counted && rep.ndcg_at(5) == n5 / counted,
               "ndcg means disagree with brute force");
  }
  return out;
}

// ---------------------------------------------------------------------------
// 10. determinism and exact resumption

Outcome criterion_determinism() {
  Outcome out;
  const std::string dir = test_support::fresh_temp_dir("accept_det");
  test_support::write_file(
      dir + "/raw.tsv", test_support::planted_block_lines(30, 40, 2, 0.3, 10));
  buir::PrepareArgs p;
  p.input = dir + "/raw.tsv";
  p.out_dir = dir + "/split";
  p.beta = 0.5;
  p.seed = 10;
  buir::cmd_prepare(p);

  buir::TrainArgs t;
  t.data_dir = dir + "/split";
  t.model.model = "buir_nb";
  t.model.dim = 8;
  t.model.epochs = 3;
  t.model.batch_size = 64;
  t.seed = 21;
  t.quiet = true;
  t.out_dir = dir + "/run_a";
  buir::cmd_train(t);
  t.out_dir = dir + "/run_b";
  buir::cmd_train(t);
  for (const char* name : {"/checkpoint_best.bin", "/checkpoint_final.bin",
                           "/train_state.bin"})
    out.expect(test_support::read_file(dir + "/run_a" + name) ==
                   test_support::read_file(dir + "/run_b" + name),
               std::string("re-run differs in ") + name);

  // Resume from saved checkpoint + optimizer state and match 5 steps.
  const DatasetSplit split = buir::load_split(dir + "/split");
  const auto resumes_exactly = [&](auto make_trainer) {
    auto original = make_trainer();
    for (int i = 0; i < 4; ++i) original.step();
    buir::save_checkpoint(dir + "/cp.bin", original.checkpoint());
    buir::save_train_progress(dir + "/state.bin", original.progress());
    auto resumed = make_trainer();
    resumed.restore(buir::load_checkpoint(dir + "/cp.bin"),
                    buir::load_train_progress(dir + "/state.bin"));
    bool ok = true;
    for (int i = 0; i < 5; ++i) {
      ok = ok && original.step() == resumed.step();
      ok = ok && original.checkpoint() == resumed.checkpoint();
    }
    return ok;
  };
  buir::TrainConfig tcfg;
  tcfg.batch_size = 64;
  tcfg.seed = 31;
  out.expect(resumes_exactly([&] {
               return buir::BuirTrainer(
                   buir::init_buir_model(split.train.num_users,
                                         split.train.num_items, 8,
                                         EncoderKind::kLgcn, {.num_layers = 2},
                                         buir::derive_seed(31, buir::kInitSeed)),
                   tcfg, buir::OptimizerConfig{}, split.train);
             }),
             "dual-encoder resumption diverged");
  out.expect(resumes_exactly([&] {
               return buir::BprTrainer(
                   buir::init_bpr_model(split.train.num_users,
                                        split.train.num_items, 8,
                                        buir::ScoreMode::kInnerProduct,
                                        buir::derive_seed(31, buir::kInitSeed)),
                   tcfg, buir::OptimizerConfig{}, buir::SamplerConfig{},
                   split.train);
             }),
             "ranking-baseline resumption diverged");
  return out;
}

// ---------------------------------------------------------------------------
// 11. negative-sampler distributions

Outcome criterion_samplers() {
  Outcome out;
  Rng rng = buir::make_rng(11011);

  {  // uniform over four candidates
    buir::InteractionDataset ds;
    ds.num_users = 1;
    ds.num_items = 5;
    ds.interactions = {{0, 0}};
    const BipartiteAdjacency adj = buir::build_adjacency(ds);
    const buir::NegativeSampler sampler(adj, {});
    const int draws = 100000;
    std::vector<int> counts(5, 0);
    for (int i = 0; i < draws; ++i) ++counts[sampler.sample(0, rng)];
    const double sigma = std::sqrt(0.25 * 0.75 / draws);
    bool ok = counts[0] == 0;
    for (int v = 1; v <= 4; ++v)
      ok = ok && std::abs(counts[v] / static_cast<double>(draws) - 0.25) <
                     3.0 * sigma;
    out.expect(ok, "uniform frequencies outside 3 sigma");
  }

  {  // popularity-proportional, 1:3 odds
    buir::InteractionDataset ds;
    ds.num_users = 41;
    ds.num_items = 3;
    ds.interactions = {{0, 2}};
    for (int u = 1; u <= 10; ++u) ds.interactions.push_back({u, 0});
    for (int u = 11; u <= 40; ++u) ds.interactions.push_back({u, 1});
    const BipartiteAdjacency adj = buir::build_adjacency(ds);
    buir::SamplerConfig cfg;
    cfg.strategy = buir::SamplerStrategy::kStaticGlobal;
    const buir::NegativeSampler sampler(adj, cfg);
    const int draws = 100000;
    int first = 0;
    bool never_positive = true;
    for (int i = 0; i < draws; ++i) {
      const int v = sampler.sample(0, rng);
      never_positive = never_positive && v != 2;
      if (v == 0) ++first;
    }
    const double sigma = std::sqrt(0.25 * 0.75 / draws);
    out.expect(never_positive, "popularity sampler returned a positive");
    out.expect(std::abs(first / static_cast<double>(draws) - 0.25) < 3.0 * sigma,
               "popularity ratio outside 3 sigma");
  }

  {  // pool-softmax marginal, exactly computable with two candidates
    buir::InteractionDataset ds;
    ds.num_users = 1;
    ds.num_items = 3;
    ds.interactions = {{0, 0}};
    const BipartiteAdjacency adj = buir::build_adjacency(ds);
    buir::SamplerConfig cfg;
    cfg.strategy = buir::SamplerStrategy::kAdaptiveContextual;
    cfg.candidate_pool = 2;
    const buir::NegativeSampler sampler(adj, cfg);
    const double s1 = 0.9, s2 = -0.1;
    const buir::NegativeSampler::ScoreFn scorer = [&](int, int item) {
      return item == 1 ? s1 : s2;
    };
    const int draws = 100000;
    int ones = 0;
    for (int i = 0; i < draws; ++i)
      if (sampler.sample(0, rng, scorer) == 1) ++ones;
    const double softmax1 = 1.0 / (1.0 + std::exp(-(s1 - s2)));
    const double expected = 0.25 + 0.5 * softmax1;
    const double sigma = std::sqrt(expected * (1.0 - expected) / draws);
    out.expect(std::abs(ones / static_cast<double>(draws) - expected) <
                   3.0 * sigma,
               "pool-softmax marginal outside 3 sigma");
  }

  {  // a million draws, never a training positive
    const buir::InteractionDataset data =
        test_support::planted_block_dataset(100, 150, 2, 0.2, 111);
    const BipartiteAdjacency adj = buir::build_adjacency(data);
    const BprModel model = buir::init_bpr_model(
        data.num_users, data.num_items, 8, buir::ScoreMode::kInnerProduct, 3);
    const buir::NegativeSampler::ScoreFn scorer = [&](int u, int v) {
      return buir::bpr_score(model, u, v);
    };
    bool clean = true;
    for (const buir::SamplerStrategy strategy :
         {buir::SamplerStrategy::kUniform, buir::SamplerStrategy::kStaticGlobal,
          buir::SamplerStrategy::kAdaptiveContextual}) {
      buir::SamplerConfig cfg;
      cfg.strategy = strategy;
      cfg.candidate_pool = 8;
      const buir::NegativeSampler sampler(adj, cfg);
      const int draws = 334000;
      for (int i = 0; i < draws; ++i) {
        const int u =
            static_cast<int>(buir::uniform_below(rng, data.num_users));
        clean = clean && !adj.has_edge(u, sampler.sample(u, rng, scorer));
      }
    }
    out.expect(clean, "a sampled negative was a training positive");
  }
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "loss identity (2 - 2cos vs normalized squared distance)",
       criterion_loss_identity},
      {2, "gradient correctness vs central finite differences",
       criterion_gradients},
      {3, "graph-propagation adjoint identity", criterion_adjoint},
      {4, "target-encoder EMA exactness", criterion_ema},
      {5, "non-collapse on the planted-block dataset", criterion_non_collapse},
      {6, "sparse-regime direction vs uniform ranking baseline",
       criterion_sparse_direction},
      {7, "augmentation keep-rate statistics", criterion_augmentation_stats},
      {8, "graph-encoder degeneracies", criterion_lgcn_degeneracy},
      {9, "ranking metrics vs brute force", criterion_metric_oracle},
      {10, "determinism and exact resumption", criterion_determinism},
      {11, "negative-sampler distributions", criterion_samplers},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %2d (%6.2fs): %s%s%s\n",
                outcome.pass ? "PASS" : "FAIL", c.id, seconds, c.name,
                outcome.detail.empty() ? "" : " -- ",
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures > 0)
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  else
    std::printf("all %zu criteria passed\n", criteria.size());
  return failures;
}
