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

// The bootstrapped dual-encoder framework. An online encoder (embedding
// tables plus an affine predictor) is trained by gradient descent to predict
// the output of a target encoder across each positive user-item pair; the
// target encoder is an exponential moving average of the online one and
// never receives gradients. No negative sampling anywhere.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "buir/adam.hpp"
#include "buir/adjacency.hpp"
#include "buir/augment.hpp"
#include "buir/common.hpp"
#include "buir/embedding.hpp"
#include "buir/lgcn.hpp"
#include "buir/predictor.hpp"
#include "buir/random.hpp"
#include "buir/topk.hpp"

namespace buir {

enum class EncoderKind { kId, kLgcn };

struct BuirModel {
  EncoderKind encoder_kind = EncoderKind::kId;
  LgcnConfig lgcn;
  EmbeddingTable online;      // trained by gradients
  EmbeddingTable target;      // EMA of online, provides prediction targets
  PredictorParams predictor;  // belongs to the online parameter set

  int dim() const { return online.dim(); }
  int num_users() const { return static_cast<int>(online.users.rows); }
  int num_items() const { return static_cast<int>(online.items.rows); }
};

struct TrainConfig {
  double momentum_tau = 0.995;
  int batch_size = 1024;
  int max_epochs = 500;
  int early_stop_patience = 50;
  std::uint64_t seed = 0;
  AugmentConfig augment;
};

inline BuirModel init_buir_model(int num_users, int num_items, int dim,
                                 EncoderKind kind, const LgcnConfig& lgcn,
                                 std::uint64_t init_seed) {
  BuirModel m;
  m.encoder_kind = kind;
  m.lgcn = lgcn;
  Rng rng = make_rng(init_seed);
  m.online = init_embedding_table(num_users, num_items, dim, rng);
  m.target = m.online;  // targets start meaningful at step 0
  m.predictor = init_predictor(dim, rng);
  return m;
}

// Norms below this floor are treated as representation collapse and surfaced
// as a hard error rather than silently clamped.
constexpr double kNormFloor = 1e-12;

namespace detail {

inline void check_norm(double n, const char* what) {
  if (!(n >= kNormFloor))
    throw NumericError(std::string("degenerate norm in ") + what +
                       " (representation collapse or bad initialization)");
}

// Adds d(-cos(a, b))/da to grad_a and returns -cos(a, b). b is a constant.
inline double accumulate_neg_cosine(std::span<const double> a,
                                    std::span<const double> b,
                                    std::span<double> grad_a,
                                    const char* what) {
  const double na = norm2(a);
  const double nb = norm2(b);
  check_norm(na, what);
  check_norm(nb, what);
  const double c = dot(a, b) / (na * nb);
  const double inv_ab = 1.0 / (na * nb);
  const double self = c / (na * na);
  for (std::size_t i = 0; i < a.size(); ++i)
    grad_a[i] -= b[i] * inv_ab - self * a[i];
  return -c;
}

inline double checked_cosine(std::span<const double> a,
                             std::span<const double> b, const char* what) {
  const double na = norm2(a);
  const double nb = norm2(b);
  check_norm(na, what);
  check_norm(nb, what);
  return dot(a, b) / (na * nb);
}

}  // namespace detail

// Negative symmetric cosine between online predictions and target
// representations; target vectors are constants. The squared-l2 form over
// normalized vectors equals this up to an additive constant, which the
// optimization drops.
inline double buir_loss(std::span<const double> online_u,
                        std::span<const double> online_v,
                        std::span<const double> target_u,
                        std::span<const double> target_v,
                        const PredictorParams& q) {
  const std::vector<double> pu = predict(q, online_u);
  const std::vector<double> pv = predict(q, online_v);
  return -detail::checked_cosine(pu, target_v, "predicted user vector") -
         detail::checked_cosine(pv, target_u, "predicted item vector");
}

// Batch-mean gradients of the loss with respect to the online parameters.
// The dense user/item buffers are table-shaped; touched_* lists the rows
// that actually carry gradient (all rows in graph-encoder mode, where the
// propagation spreads gradient across the tables).
struct BuirGradients {
  Matrix user;
  Matrix item;
  std::vector<int> touched_users;
  std::vector<int> touched_items;
  Matrix pred_weight;
  std::vector<double> pred_bias;
  double loss = 0.0;
};

inline BuirGradients buir_loss_gradients(
    std::span<const Interaction> batch, const BuirModel& model,
    const BipartiteAdjacency* adj = nullptr,
    const AugmentedNeighborhood* aug = nullptr) {
  require(!batch.empty(), "gradient step needs a non-empty batch");
  const int d = model.dim();
  const bool graph = model.encoder_kind == EncoderKind::kLgcn;
  if (graph)
    require(adj != nullptr, "graph encoder needs the adjacency structure");

  // Forward both encoders on the same (possibly augmented) view. Identity
  // encoders read the tables directly.
  EmbeddingTable online_reprs, target_reprs;
  const EmbeddingTable* on = &model.online;
  const EmbeddingTable* tg = &model.target;
  if (graph) {
    online_reprs = encode_lgcn(model.online, *adj, model.lgcn, aug);
    target_reprs = encode_lgcn(model.target, *adj, model.lgcn, aug);
    on = &online_reprs;
    tg = &target_reprs;
  }

  BuirGradients g;
  g.user = Matrix(model.online.users.rows, d);
  g.item = Matrix(model.online.items.rows, d);
  g.pred_weight = Matrix(d, d);
  g.pred_bias.assign(d, 0.0);

  std::vector<double> pu(d), pv(d), gpu(d), gpv(d), gx(d);
  std::vector<std::uint8_t> user_seen(g.user.rows, 0), item_seen(g.item.rows, 0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (const Interaction& e : batch) {
    const auto ou = on->users.row(e.user);
    const auto ov = on->items.row(e.item);
    const auto tu = tg->users.row(e.user);
    const auto tv = tg->items.row(e.item);
    predict(model.predictor, ou, pu);
    predict(model.predictor, ov, pv);
    std::fill(gpu.begin(), gpu.end(), 0.0);
    std::fill(gpv.begin(), gpv.end(), 0.0);
    g.loss += detail::accumulate_neg_cosine(pu, tv, gpu, "predicted user vector");
    g.loss += detail::accumulate_neg_cosine(pv, tu, gpv, "predicted item vector");

    // Through the predictor: weight gets the outer products, bias the sums,
    // the encoder outputs get W^T * (upstream).
    for (int i = 0; i < d; ++i) {
      const double wu = inv_b * gpu[i];
      const double wv = inv_b * gpv[i];
      auto wrow = g.pred_weight.row(i);
      for (int j = 0; j < d; ++j) wrow[j] += wu * ou[j] + wv * ov[j];
      g.pred_bias[i] += wu + wv;
    }
    predict_backward_input(model.predictor, gpu, gx);
    axpy(inv_b, gx, g.user.row(e.user));
    predict_backward_input(model.predictor, gpv, gx);
    axpy(inv_b, gx, g.item.row(e.item));
    user_seen[e.user] = 1;
    item_seen[e.item] = 1;
  }
  g.loss *= inv_b;

  if (graph) {
    // Pull the gradient on final representations back onto the tables.
    EmbeddingTable final_grad;
    final_grad.users = std::move(g.user);
    final_grad.items = std::move(g.item);
    EmbeddingTable table_grad =
        encode_lgcn_backward(final_grad, *adj, model.lgcn, aug);
    g.user = std::move(table_grad.users);
    g.item = std::move(table_grad.items);
    g.touched_users.resize(g.user.rows);
    g.touched_items.resize(g.item.rows);
    for (std::size_t i = 0; i < g.user.rows; ++i)
      g.touched_users[i] = static_cast<int>(i);
    for (std::size_t i = 0; i < g.item.rows; ++i)
      g.touched_items[i] = static_cast<int>(i);
  } else {
    for (std::size_t i = 0; i < user_seen.size(); ++i)
      if (user_seen[i]) g.touched_users.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < item_seen.size(); ++i)
      if (item_seen[i]) g.touched_items.push_back(static_cast<int>(i));
  }
  return g;
}

// target <- tau * target + (1 - tau) * online, elementwise. Applied once per
// optimizer step, after the online update.
inline void momentum_update(EmbeddingTable& target,
                            const EmbeddingTable& online, double tau) {
  require(target.same_shape(online), "momentum update shape mismatch");
  require(tau >= 0.0 && tau <= 1.0, "momentum coefficient must lie in [0, 1]");
  for (std::size_t i = 0; i < target.users.data.size(); ++i)
    target.users.data[i] =
        tau * target.users.data[i] + (1.0 - tau) * online.users.data[i];
  for (std::size_t i = 0; i < target.items.data.size(); ++i)
    target.items.data[i] =
        tau * target.items.data[i] + (1.0 - tau) * online.items.data[i];
}

// Unnormalized cross-prediction score s(u, v) = q(f(u))^T f(v) + f(u)^T
// q(f(v)), computed from online representations only.
inline double interaction_score(std::span<const double> online_u,
                                std::span<const double> online_v,
                                const PredictorParams& q) {
  const std::vector<double> pu = predict(q, online_u);
  const std::vector<double> pv = predict(q, online_v);
  return dot(pu, online_v) + dot(online_u, pv);
}

// Frozen scoring context: representations (full, unaugmented graph for the
// graph encoder) and, in cross-prediction mode, their predictor images, so
// scoring a pair is at most two dot products. With cross == false the score
// degrades to the plain inner product (classic matrix factorization).
struct PairScorer {
  Matrix user_repr;
  Matrix item_repr;
  Matrix q_user;
  Matrix q_item;
  bool cross = true;

  int num_items() const { return static_cast<int>(item_repr.rows); }

  double score(int u, int v) const {
    if (!cross) return dot(user_repr.row(u), item_repr.row(v));
    return dot(q_user.row(u), item_repr.row(v)) +
           dot(user_repr.row(u), q_item.row(v));
  }
  void score_items_for_user(int u, std::span<double> out) const {
    const auto uu = user_repr.row(u);
    if (!cross) {
      for (std::size_t v = 0; v < item_repr.rows; ++v)
        out[v] = dot(uu, item_repr.row(v));
      return;
    }
    const auto qu = q_user.row(u);
    for (std::size_t v = 0; v < item_repr.rows; ++v)
      out[v] = dot(qu, item_repr.row(v)) + dot(uu, q_item.row(v));
  }
};

inline Matrix apply_predictor_rows(const PredictorParams& q, const Matrix& in) {
  Matrix out(in.rows, in.cols);
  for (std::size_t r = 0; r < in.rows; ++r) predict(q, in.row(r), out.row(r));
  return out;
}

inline PairScorer make_scorer(const BuirModel& model,
                              const BipartiteAdjacency* adj = nullptr) {
  PairScorer s;
  if (model.encoder_kind == EncoderKind::kLgcn) {
    require(adj != nullptr, "graph encoder needs the adjacency structure");
    EmbeddingTable reprs = encode_lgcn(model.online, *adj, model.lgcn);
    s.user_repr = std::move(reprs.users);
    s.item_repr = std::move(reprs.items);
  } else {
    s.user_repr = model.online.users;
    s.item_repr = model.online.items;
  }
  s.q_user = apply_predictor_rows(model.predictor, s.user_repr);
  s.q_item = apply_predictor_rows(model.predictor, s.item_repr);
  return s;
}

// Top-K retrieval for one user over all items outside `exclude_sorted`.
inline std::vector<ScoredItem> recommend_topk(
    const PairScorer& scorer, int user, int k,
    std::span<const int> exclude_sorted) {
  std::vector<double> scores(scorer.item_repr.rows);
  scorer.score_items_for_user(user, scores);
  return select_top_k(scores, exclude_sorted, k);
}

inline std::vector<ScoredItem> recommend_topk(
    const BuirModel& model, int user, int k,
    std::span<const int> exclude_sorted,
    const BipartiteAdjacency* adj = nullptr) {
  return recommend_topk(make_scorer(model, adj), user, k, exclude_sorted);
}

// One optimization step: sample the augmented view, compute gradients,
// apply Adam to the online parameters, then move the target by EMA. The
// target tables are never seen by the optimizer.
inline double buir_train_step(BuirModel& model,
                              std::span<const Interaction> batch,
                              ModelOptState& opt, const TrainConfig& tcfg,
                              const OptimizerConfig& ocfg,
                              const BipartiteAdjacency* adj, Rng& aug_rng) {
  AugmentedNeighborhood aug;
  const AugmentedNeighborhood* aug_ptr = nullptr;
  if (model.encoder_kind == EncoderKind::kLgcn && tcfg.augment.enabled) {
    aug = sample_augmentation(*adj, tcfg.augment, aug_rng);
    aug_ptr = &aug;
  }
  const BuirGradients g = buir_loss_gradients(batch, model, adj, aug_ptr);

  const std::int64_t t = ++opt.t;
  adam_step_rows(model.online.users, g.user, g.touched_users, opt.user, t, ocfg);
  adam_step_rows(model.online.items, g.item, g.touched_items, opt.item, t, ocfg);
  adam_step_dense(std::span<double>(model.predictor.weight.data),
                  std::span<const double>(g.pred_weight.data), opt.pred_weight,
                  t, ocfg);
  adam_step_dense(std::span<double>(model.predictor.bias),
                  std::span<const double>(g.pred_bias), opt.pred_bias, t, ocfg);
  momentum_update(model.target, model.online, tcfg.momentum_tau);
  return g.loss;
}

inline ModelOptState make_opt_state(const BuirModel& model) {
  ModelOptState s;
  s.user.init(model.online.users.size());
  s.item.init(model.online.items.size());
  s.pred_weight.init(model.predictor.weight.size());
  s.pred_bias.init(model.predictor.bias.size());
  return s;
}

}  // namespace buir
