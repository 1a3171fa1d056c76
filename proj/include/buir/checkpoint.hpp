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

// Binary model checkpoints and optimizer state, with a fixed byte layout
// (documented in the README) shared by every model kind. All integers and
// doubles are little-endian; arrays are row-major doubles.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "buir/adam.hpp"
#include "buir/bpr.hpp"
#include "buir/buir.hpp"
#include "buir/common.hpp"
#include "buir/metrics.hpp"

namespace buir {

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

enum class ModelKind : std::uint32_t {
  kBuirId = 0,
  kBuirLgcn = 1,
  kBprInner = 2,
  kBprCross = 3,
};

inline bool is_buir(ModelKind k) {
  return k == ModelKind::kBuirId || k == ModelKind::kBuirLgcn;
}

// In-memory image of a checkpoint file. For the pairwise-ranking baseline
// the target tables are unused and stored as zeros (the layout is shared
// across model kinds; the kind tag tells them apart), and the predictor
// arrays are zeros in inner-product mode.
struct Checkpoint {
  ModelKind kind = ModelKind::kBuirId;
  std::uint64_t num_users = 0;
  std::uint64_t num_items = 0;
  std::uint64_t dim = 0;
  std::uint32_t num_layers = 0;
  double tau = 0.0;

  Matrix online_user;
  Matrix online_item;
  Matrix pred_weight;
  std::vector<double> pred_bias;
  Matrix target_user;
  Matrix target_item;

  bool operator==(const Checkpoint&) const = default;
};

namespace io {

constexpr char kCheckpointMagic[8] = {'B', 'U', 'I', 'R', 'C', 'K', 'P', 'T'};
constexpr char kOptStateMagic[8] = {'B', 'U', 'I', 'R', 'O', 'P', 'T', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated file: " + path);
  return v;
}

inline void write_doubles(std::ostream& out, std::span<const double> a) {
  out.write(reinterpret_cast<const char*>(a.data()),
            static_cast<std::streamsize>(a.size() * sizeof(double)));
}

inline void read_doubles(std::istream& in, std::span<double> a,
                         const std::string& path) {
  in.read(reinterpret_cast<char*>(a.data()),
          static_cast<std::streamsize>(a.size() * sizeof(double)));
  if (!in) throw DataError("truncated file: " + path);
}

}  // namespace io

inline void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(io::kCheckpointMagic, sizeof(io::kCheckpointMagic));
  io::write_pod(out, io::kFormatVersion);
  io::write_pod(out, cp.num_users);
  io::write_pod(out, cp.num_items);
  io::write_pod(out, cp.dim);
  io::write_pod(out, static_cast<std::uint32_t>(cp.kind));
  io::write_pod(out, cp.num_layers);
  io::write_pod(out, cp.tau);
  io::write_doubles(out, cp.online_user.data);
  io::write_doubles(out, cp.online_item.data);
  io::write_doubles(out, cp.pred_weight.data);
  io::write_doubles(out, cp.pred_bias);
  io::write_doubles(out, cp.target_user.data);
  io::write_doubles(out, cp.target_item.data);
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, io::kCheckpointMagic, sizeof(magic)) != 0)
    throw DataError("not a checkpoint file: " + path);
  const auto version = io::read_pod<std::uint32_t>(in, path);
  if (version != io::kFormatVersion)
    throw DataError("unsupported checkpoint version in " + path);
  Checkpoint cp;
  cp.num_users = io::read_pod<std::uint64_t>(in, path);
  cp.num_items = io::read_pod<std::uint64_t>(in, path);
  cp.dim = io::read_pod<std::uint64_t>(in, path);
  cp.kind = static_cast<ModelKind>(io::read_pod<std::uint32_t>(in, path));
  cp.num_layers = io::read_pod<std::uint32_t>(in, path);
  cp.tau = io::read_pod<double>(in, path);
  const auto m = static_cast<std::size_t>(cp.num_users);
  const auto n = static_cast<std::size_t>(cp.num_items);
  const auto d = static_cast<std::size_t>(cp.dim);
  cp.online_user = Matrix(m, d);
  cp.online_item = Matrix(n, d);
  cp.pred_weight = Matrix(d, d);
  cp.pred_bias.assign(d, 0.0);
  cp.target_user = Matrix(m, d);
  cp.target_item = Matrix(n, d);
  io::read_doubles(in, cp.online_user.data, path);
  io::read_doubles(in, cp.online_item.data, path);
  io::read_doubles(in, cp.pred_weight.data, path);
  io::read_doubles(in, cp.pred_bias, path);
  io::read_doubles(in, cp.target_user.data, path);
  io::read_doubles(in, cp.target_item.data, path);
  return cp;
}

inline Checkpoint to_checkpoint(const BuirModel& model, double tau) {
  Checkpoint cp;
  cp.kind = model.encoder_kind == EncoderKind::kLgcn ? ModelKind::kBuirLgcn
                                                     : ModelKind::kBuirId;
  cp.num_users = model.num_users();
  cp.num_items = model.num_items();
  cp.dim = model.dim();
  cp.num_layers = model.encoder_kind == EncoderKind::kLgcn
                      ? static_cast<std::uint32_t>(model.lgcn.num_layers)
                      : 0;
  cp.tau = tau;
  cp.online_user = model.online.users;
  cp.online_item = model.online.items;
  cp.pred_weight = model.predictor.weight;
  cp.pred_bias = model.predictor.bias;
  cp.target_user = model.target.users;
  cp.target_item = model.target.items;
  return cp;
}

inline Checkpoint to_checkpoint(const BprModel& model) {
  Checkpoint cp;
  const bool cross = model.score_mode == ScoreMode::kCrossPrediction;
  cp.kind = cross ? ModelKind::kBprCross : ModelKind::kBprInner;
  cp.num_users = model.num_users();
  cp.num_items = model.num_items();
  cp.dim = model.dim();
  const auto d = static_cast<std::size_t>(model.dim());
  cp.online_user = model.user_matrix;
  cp.online_item = model.item_matrix;
  cp.pred_weight = cross ? model.predictor.weight : Matrix(d, d);
  cp.pred_bias = cross ? model.predictor.bias : std::vector<double>(d, 0.0);
  cp.target_user = Matrix(model.user_matrix.rows, d);
  cp.target_item = Matrix(model.item_matrix.rows, d);
  return cp;
}

inline BuirModel buir_from_checkpoint(const Checkpoint& cp) {
  require(is_buir(cp.kind), "checkpoint does not hold a dual-encoder model");
  BuirModel m;
  m.encoder_kind =
      cp.kind == ModelKind::kBuirLgcn ? EncoderKind::kLgcn : EncoderKind::kId;
  m.lgcn.num_layers = static_cast<int>(cp.num_layers);
  m.online.users = cp.online_user;
  m.online.items = cp.online_item;
  m.predictor.weight = cp.pred_weight;
  m.predictor.bias = cp.pred_bias;
  m.target.users = cp.target_user;
  m.target.items = cp.target_item;
  return m;
}

inline BprModel bpr_from_checkpoint(const Checkpoint& cp) {
  require(!is_buir(cp.kind), "checkpoint does not hold a ranking baseline");
  BprModel m;
  m.score_mode = cp.kind == ModelKind::kBprCross ? ScoreMode::kCrossPrediction
                                                 : ScoreMode::kInnerProduct;
  m.user_matrix = cp.online_user;
  m.item_matrix = cp.online_item;
  if (m.score_mode == ScoreMode::kCrossPrediction) {
    m.predictor.weight = cp.pred_weight;
    m.predictor.bias = cp.pred_bias;
  }
  return m;
}

// Optimizer moments plus training-loop position: everything needed to resume
// a run bit-exactly from where it stopped.
struct TrainProgress {
  ModelOptState opt;
  std::uint64_t epochs_done = 0;
  std::uint64_t steps_done_in_epoch = 0;
  EarlyStopState early;

  bool operator==(const TrainProgress&) const = default;
};

namespace io {

inline void write_adam_state(std::ostream& out, const AdamState& s) {
  write_pod(out, static_cast<std::uint64_t>(s.m.size()));
  write_doubles(out, s.m);
  write_doubles(out, s.v);
}

inline AdamState read_adam_state(std::istream& in, const std::string& path) {
  AdamState s;
  const auto n = read_pod<std::uint64_t>(in, path);
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  read_doubles(in, s.m, path);
  read_doubles(in, s.v, path);
  return s;
}

}  // namespace io

inline void save_train_progress(const std::string& path,
                                const TrainProgress& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write optimizer state: " + path);
  out.write(io::kOptStateMagic, sizeof(io::kOptStateMagic));
  io::write_pod(out, io::kFormatVersion);
  io::write_pod(out, static_cast<std::int64_t>(p.opt.t));
  io::write_pod(out, p.epochs_done);
  io::write_pod(out, p.steps_done_in_epoch);
  io::write_pod(out, p.early.best_metric);
  io::write_pod(out, static_cast<std::int64_t>(p.early.best_epoch));
  io::write_pod(out, static_cast<std::int64_t>(p.early.epochs_since_best));
  io::write_pod(out, static_cast<std::int64_t>(p.early.patience));
  io::write_pod(out, static_cast<std::int64_t>(p.early.epoch));
  io::write_adam_state(out, p.opt.user);
  io::write_adam_state(out, p.opt.item);
  io::write_adam_state(out, p.opt.pred_weight);
  io::write_adam_state(out, p.opt.pred_bias);
  if (!out) throw DataError("failed writing optimizer state: " + path);
}

inline TrainProgress load_train_progress(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open optimizer state: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, io::kOptStateMagic, sizeof(magic)) != 0)
    throw DataError("not an optimizer-state file: " + path);
  const auto version = io::read_pod<std::uint32_t>(in, path);
  if (version != io::kFormatVersion)
    throw DataError("unsupported optimizer-state version in " + path);
  TrainProgress p;
  p.opt.t = io::read_pod<std::int64_t>(in, path);
  p.epochs_done = io::read_pod<std::uint64_t>(in, path);
  p.steps_done_in_epoch = io::read_pod<std::uint64_t>(in, path);
  p.early.best_metric = io::read_pod<double>(in, path);
  p.early.best_epoch = static_cast<int>(io::read_pod<std::int64_t>(in, path));
  p.early.epochs_since_best =
      static_cast<int>(io::read_pod<std::int64_t>(in, path));
  p.early.patience = static_cast<int>(io::read_pod<std::int64_t>(in, path));
  p.early.epoch = static_cast<int>(io::read_pod<std::int64_t>(in, path));
  p.opt.user = io::read_adam_state(in, path);
  p.opt.item = io::read_adam_state(in, path);
  p.opt.pred_weight = io::read_adam_state(in, path);
  p.opt.pred_bias = io::read_adam_state(in, path);
  return p;
}

}  // namespace buir
