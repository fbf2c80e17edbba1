// Copyright 2026 The privot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Counter-based pseudo randomness. The generator is SplitMix64 evaluated at
// (key + counter * golden_gamma); the i-th draw of a stream is a pure
// function of (key, i), so any consumer can be replayed or sharded without
// shared state. Continuous laws are fixed transforms of the 53-bit uniforms:
// Laplace by inverse CDF, Gaussian by Box-Muller.

#ifndef PRIVOT_RNG_HPP_
#define PRIVOT_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <string_view>

namespace privot {

namespace rng_detail {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace rng_detail

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  // i-th raw word of the stream, independent of draw order elsewhere.
  std::uint64_t word_at(std::uint64_t i) const {
    return rng_detail::mix64(key_ + (i + 1) * rng_detail::kGoldenGamma);
  }

  std::uint64_t next_u64() { return word_at(counter_++); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1p-53; }

  // Uniform on the open interval (0, 1); safe under log().
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  // Uniform on (0, 1]; safe as a Box-Muller radius argument.
  double uniform_closed_top() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
  }

  double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Laplace(0, scale) by inverse CDF.
  double laplace(double scale) {
    const double v = uniform_open() - 0.5;
    return -scale * (v < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::fabs(v));
  }

  // Standard normal by Box-Muller (cosine branch; two uniforms per draw).
  double normal() {
    const double u1 = uniform_closed_top();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Integer in [0, n) by modulo; bias is negligible for n << 2^64.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Independent child stream; forks with distinct indices never collide in
  // practice because the key mixing is a bijection composed with an xor.
  CounterRng fork(std::uint64_t index) const {
    return CounterRng(rng_detail::mix64(key_ ^ rng_detail::mix64(index + 0x5bf03635ULL)));
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Named substream of a user seed, e.g. substream(seed, "noise").
inline CounterRng substream(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return CounterRng(rng_detail::mix64(rng_detail::mix64(seed) ^ h));
}

}  // namespace privot

#endif  // PRIVOT_RNG_HPP_
