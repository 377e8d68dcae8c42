// serkit/rng.hpp
//
// Copyright 2026 The serkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SERKIT_RNG_HPP_
#define SERKIT_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace serkit {

/// Seeded random source used everywhere randomness is needed.
///
/// The engine is std::mt19937_64 but all distributions are derived by
/// hand from its raw output, so two runs with the same seed produce the
/// same stream on a given platform regardless of the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t integer(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(integer(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Derives an independent sub-stream, e.g. one per epoch or per batch.
  Rng fork(std::uint64_t stream) {
    return Rng(mix(engine_seed_token(), stream));
  }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words.
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t engine_seed_token() {
    // Draw one word; forked streams advance the parent deterministically.
    return engine_();
  }

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// FNV-1a over raw bytes; used for cheap content checksums.
inline std::uint64_t fnv1a(const void* data, std::size_t size,
                           std::uint64_t seed = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::vector<double>& values,
                           std::uint64_t seed = 0xcbf29ce484222325ULL) {
  return values.empty() ? seed : fnv1a(values.data(), values.size() * sizeof(double), seed);
}

}  // namespace serkit

#endif  // SERKIT_RNG_HPP_
