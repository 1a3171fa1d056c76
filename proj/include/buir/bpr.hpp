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

// Pairwise-ranking matrix factorization baseline with swappable negative
// samplers (uniform, popularity-proportional, score-adaptive) and an
// optional cross-prediction scoring variant that reuses the affine
// predictor on top of plain MF parameters.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "buir/adam.hpp"
#include "buir/adjacency.hpp"
#include "buir/buir.hpp"
#include "buir/common.hpp"
#include "buir/predictor.hpp"
#include "buir/random.hpp"

namespace buir {

enum class ScoreMode { kInnerProduct, kCrossPrediction };

struct BprModel {
  Matrix user_matrix;  // M x D
  Matrix item_matrix;  // N x D
  ScoreMode score_mode = ScoreMode::kInnerProduct;
  PredictorParams predictor;  // used only in cross-prediction mode

  int dim() const { return static_cast<int>(user_matrix.cols); }
  int num_users() const { return static_cast<int>(user_matrix.rows); }
  int num_items() const { return static_cast<int>(item_matrix.rows); }
};

inline BprModel init_bpr_model(int num_users, int num_items, int dim,
                               ScoreMode mode, std::uint64_t init_seed) {
  BprModel m;
  m.score_mode = mode;
  Rng rng = make_rng(init_seed);
  EmbeddingTable t = init_embedding_table(num_users, num_items, dim, rng);
  m.user_matrix = std::move(t.users);
  m.item_matrix = std::move(t.items);
  m.predictor = mode == ScoreMode::kCrossPrediction ? init_predictor(dim, rng)
                                                    : PredictorParams{};
  return m;
}

inline double bpr_score(const BprModel& m, int u, int v) {
  if (m.score_mode == ScoreMode::kInnerProduct)
    return dot(m.user_matrix.row(u), m.item_matrix.row(v));
  return interaction_score(m.user_matrix.row(u), m.item_matrix.row(v),
                           m.predictor);
}

// Numerically stable log(1 + exp(x)).
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

// -ln sigmoid(score_pos - score_neg), always >= 0.
inline double bpr_loss(double score_pos, double score_neg) {
  return softplus(-(score_pos - score_neg));
}

enum class SamplerStrategy { kUniform, kStaticGlobal, kAdaptiveContextual };

struct SamplerConfig {
  SamplerStrategy strategy = SamplerStrategy::kUniform;
  int negatives_per_positive = 1;
  int candidate_pool = 32;  // adaptive strategy only
};

namespace detail {

// Walker alias method for O(1) draws from a fixed discrete distribution.
struct AliasTable {
  std::vector<double> prob;
  std::vector<int> alias;

  void build(std::span<const double> weights) {
    const std::size_t n = weights.size();
    prob.assign(n, 0.0);
    alias.assign(n, 0);
    double total = 0.0;
    for (double w : weights) total += w;
    require(total > 0.0, "alias table needs positive total weight");
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i)
      scaled[i] = weights[i] * static_cast<double>(n) / total;
    std::vector<int> small, large;
    for (std::size_t i = 0; i < n; ++i)
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<int>(i));
    while (!small.empty() && !large.empty()) {
      const int s = small.back();
      small.pop_back();
      const int l = large.back();
      large.pop_back();
      prob[s] = scaled[s];
      alias[s] = l;
      scaled[l] = scaled[l] + scaled[s] - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (int i : large) prob[i] = 1.0;
    for (int i : small) prob[i] = 1.0;
  }

  int sample(Rng& rng) const {
    const auto i = static_cast<std::size_t>(uniform_below(rng, prob.size()));
    return uniform_double(rng) < prob[i] ? static_cast<int>(i) : alias[i];
  }
};

}  // namespace detail

// Draws negatives that are guaranteed to lie outside the user's training
// set. Popularity counts come from the training adjacency; the adaptive
// strategy scores a small uniform candidate pool with the scorer passed at
// sampling time and picks softmax-proportionally.
class NegativeSampler {
 public:
  using ScoreFn = std::function<double(int user, int item)>;

  NegativeSampler(const BipartiteAdjacency& adj, const SamplerConfig& cfg)
      : adj_(&adj), cfg_(cfg) {
    require(cfg_.negatives_per_positive >= 1,
            "need at least one negative per positive");
    if (cfg_.strategy == SamplerStrategy::kStaticGlobal) {
      std::vector<double> pop(adj.num_items);
      for (int v = 0; v < adj.num_items; ++v) {
        pop[v] = static_cast<double>(adj.item_degree(v));
        if (pop[v] > 0.0) ++positive_pop_items_;
      }
      alias_.build(pop);
    }
    if (cfg_.strategy == SamplerStrategy::kAdaptiveContextual)
      require(cfg_.candidate_pool >= 1, "candidate pool must be non-empty");
  }

  const SamplerConfig& config() const { return cfg_; }

  int sample(int user, Rng& rng, const ScoreFn& scorer = {}) const {
    const auto degree = adj_->user_degree(user);
    if (degree >= static_cast<std::size_t>(adj_->num_items))
      throw DataError("user has interacted with every item; nothing to sample");
    switch (cfg_.strategy) {
      case SamplerStrategy::kUniform:
        return sample_uniform(user, rng);
      case SamplerStrategy::kStaticGlobal: {
        // Every training item of this user has positive popularity, so if
        // the positive-popularity items are exactly the user's items the
        // popularity distribution has no valid support left.
        if (positive_pop_items_ == static_cast<std::size_t>(degree))
          return sample_uniform(user, rng);
        for (;;) {
          const int v = alias_.sample(rng);
          if (!adj_->has_edge(user, v)) return v;
        }
      }
      case SamplerStrategy::kAdaptiveContextual: {
        require(static_cast<bool>(scorer),
                "adaptive sampling needs a score function");
        return sample_adaptive(user, rng, scorer);
      }
    }
    throw DataError("unknown sampler strategy");
  }

 private:
  int sample_uniform(int user, Rng& rng) const {
    for (;;) {
      const int v = static_cast<int>(uniform_below(
          rng, static_cast<std::uint64_t>(adj_->num_items)));
      if (!adj_->has_edge(user, v)) return v;
    }
  }

  int sample_adaptive(int user, Rng& rng, const ScoreFn& scorer) const {
    const int pool = cfg_.candidate_pool;
    std::vector<int> cand(pool);
    std::vector<double> sc(pool);
    double max_s = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < pool; ++i) {
      cand[i] = sample_uniform(user, rng);
      sc[i] = scorer(user, cand[i]);
      max_s = std::max(max_s, sc[i]);
    }
    double total = 0.0;
    for (int i = 0; i < pool; ++i) {
      sc[i] = std::exp(sc[i] - max_s);
      total += sc[i];
    }
    double r = uniform_double(rng) * total;
    for (int i = 0; i < pool; ++i) {
      r -= sc[i];
      if (r < 0.0) return cand[i];
    }
    return cand[pool - 1];
  }

  const BipartiteAdjacency* adj_;
  SamplerConfig cfg_;
  detail::AliasTable alias_;
  std::size_t positive_pop_items_ = 0;
};

struct BprTriple {
  int user = 0;
  int pos = 0;
  int neg = 0;
};

struct BprGradients {
  Matrix user;
  Matrix item;
  std::vector<int> touched_users;
  std::vector<int> touched_items;
  Matrix pred_weight;  // cross-prediction mode only
  std::vector<double> pred_bias;
  double loss = 0.0;
};

// Mean pairwise-ranking loss and its exact gradients over the given triples.
inline BprGradients bpr_loss_gradients(std::span<const BprTriple> triples,
                                       const BprModel& model) {
  require(!triples.empty(), "gradient step needs a non-empty batch");
  const int d = model.dim();
  const bool cross = model.score_mode == ScoreMode::kCrossPrediction;

  BprGradients g;
  g.user = Matrix(model.user_matrix.rows, d);
  g.item = Matrix(model.item_matrix.rows, d);
  g.pred_weight = cross ? Matrix(d, d) : Matrix();
  g.pred_bias.assign(cross ? d : 0, 0.0);
  std::vector<std::uint8_t> user_seen(g.user.rows, 0), item_seen(g.item.rows, 0);

  const double coef = 1.0 / static_cast<double>(triples.size());
  std::vector<double> qu(d), qv_pos(d), qv_neg(d), wtu(d), wtv(d);

  for (const BprTriple& tr : triples) {
    const auto pu = model.user_matrix.row(tr.user);
    const auto pv_pos = model.item_matrix.row(tr.pos);
    const auto pv_neg = model.item_matrix.row(tr.neg);
    const double diff =
        bpr_score(model, tr.user, tr.pos) - bpr_score(model, tr.user, tr.neg);
    g.loss += coef * softplus(-diff);
    const double c = coef * logistic(-diff);  // -dL/d(s_pos) = dL/d(s_neg)

    auto gu = g.user.row(tr.user);
    auto gvp = g.item.row(tr.pos);
    auto gvn = g.item.row(tr.neg);
    if (!cross) {
      axpy(c, pv_neg, gu);
      axpy(-c, pv_pos, gu);
      axpy(-c, pu, gvp);
      axpy(c, pu, gvn);
    } else {
      predict(model.predictor, pu, qu);
      predict(model.predictor, pv_pos, qv_pos);
      predict(model.predictor, pv_neg, qv_neg);
      predict_backward_input(model.predictor, pu, wtu);
      // ds/du = W^T v + q(v); ds/dv = q(u) + W^T u
      predict_backward_input(model.predictor, pv_neg, wtv);
      axpy(c, wtv, gu);
      axpy(c, qv_neg, gu);
      predict_backward_input(model.predictor, pv_pos, wtv);
      axpy(-c, wtv, gu);
      axpy(-c, qv_pos, gu);
      axpy(-c, qu, gvp);
      axpy(-c, wtu, gvp);
      axpy(c, qu, gvn);
      axpy(c, wtu, gvn);
      // ds/dW = v u^T + u v^T, ds/db = v + u (the u parts cancel in g_b)
      for (int i = 0; i < d; ++i) {
        auto wrow = g.pred_weight.row(i);
        for (int j = 0; j < d; ++j)
          wrow[j] += c * ((pv_neg[i] - pv_pos[i]) * pu[j] +
                          pu[i] * (pv_neg[j] - pv_pos[j]));
        g.pred_bias[i] += c * (pv_neg[i] - pv_pos[i]);
      }
    }
    user_seen[tr.user] = 1;
    item_seen[tr.pos] = 1;
    item_seen[tr.neg] = 1;
  }

  for (std::size_t i = 0; i < user_seen.size(); ++i)
    if (user_seen[i]) g.touched_users.push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < item_seen.size(); ++i)
    if (item_seen[i]) g.touched_items.push_back(static_cast<int>(i));
  return g;
}

// Draws the negatives for a positive batch and applies one Adam step on the
// mean triple loss. Adaptive sampling scores candidates with the model as it
// stands at the start of the step.
inline double bpr_train_step(BprModel& model,
                             std::span<const Interaction> batch,
                             const NegativeSampler& sampler,
                             ModelOptState& opt, const OptimizerConfig& ocfg,
                             Rng& rng) {
  require(!batch.empty(), "gradient step needs a non-empty batch");
  NegativeSampler::ScoreFn scorer;
  if (sampler.config().strategy == SamplerStrategy::kAdaptiveContextual)
    scorer = [&model](int u, int v) { return bpr_score(model, u, v); };
  const int n_neg = sampler.config().negatives_per_positive;
  std::vector<BprTriple> triples;
  triples.reserve(batch.size() * static_cast<std::size_t>(n_neg));
  for (const Interaction& e : batch)
    for (int k = 0; k < n_neg; ++k)
      triples.push_back({e.user, e.item, sampler.sample(e.user, rng, scorer)});

  const BprGradients g = bpr_loss_gradients(triples, model);
  const std::int64_t t = ++opt.t;
  adam_step_rows(model.user_matrix, g.user, g.touched_users, opt.user, t, ocfg);
  adam_step_rows(model.item_matrix, g.item, g.touched_items, opt.item, t, ocfg);
  if (model.score_mode == ScoreMode::kCrossPrediction) {
    adam_step_dense(std::span<double>(model.predictor.weight.data),
                    std::span<const double>(g.pred_weight.data),
                    opt.pred_weight, t, ocfg);
    adam_step_dense(std::span<double>(model.predictor.bias),
                    std::span<const double>(g.pred_bias), opt.pred_bias, t,
                    ocfg);
  }
  return g.loss;
}

inline ModelOptState make_opt_state(const BprModel& model) {
  ModelOptState s;
  s.user.init(model.user_matrix.size());
  s.item.init(model.item_matrix.size());
  const bool cross = model.score_mode == ScoreMode::kCrossPrediction;
  s.pred_weight.init(cross ? model.predictor.weight.size() : 0);
  s.pred_bias.init(cross ? model.predictor.bias.size() : 0);
  return s;
}

inline PairScorer make_scorer(const BprModel& model) {
  PairScorer s;
  s.user_repr = model.user_matrix;
  s.item_repr = model.item_matrix;
  s.cross = model.score_mode == ScoreMode::kCrossPrediction;
  if (s.cross) {
    s.q_user = apply_predictor_rows(model.predictor, s.user_repr);
    s.q_item = apply_predictor_rows(model.predictor, s.item_repr);
  }
  return s;
}

}  // namespace buir
