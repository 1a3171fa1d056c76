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

// Deterministic randomness. All stochastic choices in the toolkit (splits,
// initialization, shuffling, augmentation masks, negative sampling) are pure
// functions of a seed, so identical configs give byte-identical artifacts
// and training can resume mid-run bit-exactly. The distributions are
// hand-rolled on top of mt19937_64 instead of <random> distribution objects,
// whose output is implementation-defined.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace buir {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (splitmix64(v) + 0x9e3779b97f4a7c15ULL));
}

// Seed-domain tags. One master seed fans out into independent streams:
//   derive_seed(master, kSplitSeed)    -> per-user split shuffles
//   derive_seed(master, kInitSeed)     -> parameter initialization
//   derive_seed(master, kAugmentSeed)  -> neighbor-dropout masks
//   derive_seed(master, kSamplerSeed)  -> negative sampling
//   derive_seed(master, kShuffleSeed)  -> epoch batch order
// Per-epoch / per-step streams chain further tags through mix_seed, so a
// resumed run regenerates exactly the randomness it would have seen.
enum SeedDomain : std::uint64_t {
  kSplitSeed = 0x53504c49,
  kInitSeed = 0x494e4954,
  kAugmentSeed = 0x4155474d,
  kSamplerSeed = 0x53414d50,
  kShuffleSeed = 0x53484646,
};

inline std::uint64_t derive_seed(std::uint64_t master, SeedDomain domain) {
  return mix_seed(master, static_cast<std::uint64_t>(domain));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline Rng make_rng(std::uint64_t seed, std::uint64_t a) {
  return Rng(mix_seed(seed, a));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng(mix_seed(mix_seed(seed, a), b));
}

// Uniform double in [0, 1), 53-bit resolution.
inline double uniform_double(Rng& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), rejection sampled to avoid modulo bias.
inline std::uint64_t uniform_below(Rng& g, std::uint64_t n) {
  const std::uint64_t threshold = -n % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = g();
    if (r >= threshold) return r % n;
  }
}

// Standard normal via Box-Muller (one value per call; the pair's second half
// is discarded to keep the call stateless).
inline double normal_double(Rng& g) {
  const double u1 = 1.0 - uniform_double(g);  // (0, 1]
  const double u2 = uniform_double(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <class T>
void shuffle_span(Rng& g, std::span<T> v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = uniform_below(g, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace buir
