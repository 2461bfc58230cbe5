/*
 * Copyright 2026 The Nephroscope Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NEPHROSCOPE_RANDOM_H_
#define NEPHROSCOPE_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace nephroscope {

// Seeded generator with distribution helpers whose output depends only on
// the engine stream. The standard <random> distributions are implementation
// defined, which would make model files differ across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  uint64_t UniformInt(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return draw % n;
  }

  // Uniform in [0, 1].
  double UniformClosed() {
    return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740991.0);
  }

  // Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double Normal(double mean, double stddev) {
    // Box-Muller on (0, 1] draws.
    const double u1 = 1.0 - Uniform();
    const double u2 = Uniform();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(6.283185307179586 * u2);
  }

  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename T>
  void Shuffle(std::span<T> values) {
    for (size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[UniformInt(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stable 64-bit mixing used to derive child seeds (splitmix64 finalizer).
inline uint64_t MixSeed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace nephroscope

#endif  // NEPHROSCOPE_RANDOM_H_
