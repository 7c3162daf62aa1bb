// Copyright 2026 The WADC Authors
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

#include <cstdint>
#include <initializer_list>
#include <random>

namespace wadc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed-splitting rule used everywhere randomness is consumed.
///
/// The child seed for a path (k1, k2, ...) under `root` is obtained by
/// folding each key into the running state with splitmix64:
///   s0 = splitmix64(root); s_{i+1} = splitmix64(s_i ^ splitmix64(k_i + 1)).
/// Distinct paths give statistically independent streams, and the result
/// depends only on (root, path), never on thread schedule.
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(root);
  for (std::uint64_t k : path) s = splitmix64(s ^ splitmix64(k + 1));
  return s;
}

// Stream tags keep the different consumers of one scenario seed apart.
namespace stream {
inline constexpr std::uint64_t kImpulse = 0x11;
inline constexpr std::uint64_t kDelay = 0x22;
inline constexpr std::uint64_t kLoss = 0x33;
inline constexpr std::uint64_t kNoise = 0x44;
inline constexpr std::uint64_t kSphere = 0x55;
inline constexpr std::uint64_t kEval = 0x66;
inline constexpr std::uint64_t kOperatingPoint = 0x77;
inline constexpr std::uint64_t kMoments = 0x88;
}  // namespace stream

}  // namespace wadc
