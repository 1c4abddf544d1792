/*
 * Copyright 2026 the dpf authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "common.hpp"

namespace dpf {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic RNG wrapper. Gaussian draws use an explicit Box-Muller
/// transform instead of std::normal_distribution so the stream is pinned by
/// this file alone, not by the standard library implementation.
class Rng {
public:
  explicit Rng(uint64_t seed) : eng_(splitmix64(seed)) {}

  /// Stream for one training/sampling step: resuming at step k reproduces
  /// the identical draws without replaying steps 0..k-1.
  static Rng for_step(uint64_t seed, uint64_t step) {
    return Rng(splitmix64(seed ^ (0x5851f42d4c957f2dULL * (step + 1))));
  }

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n >= 1. Modulo bias is irrelevant at the
  /// ranges used here (n << 2^64) but rejection keeps it exact.
  int64_t uniform_int(int64_t n) {
    if (n <= 0) throw UsageError("uniform_int: n must be positive");
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return static_cast<int64_t>(x % un);
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Mat gaussian_mat(int rows, int cols) {
    Mat m(rows, cols);
    for (auto& x : m.v) x = gaussian();
    return m;
  }

  /// k distinct indices from [0, n), uniform without replacement
  /// (partial Fisher-Yates; order is the draw order).
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) throw UsageError("sample_without_replacement: k out of range");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(uniform_int(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dpf
