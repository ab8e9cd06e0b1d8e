// Copyright 2026 The dpsco Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPSCO_RNG_HPP_
#define DPSCO_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace dpsco {

namespace detail {

// Finalizer of the splitmix64 generator. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

// Counter-based PRNG: draw k of a stream is a pure function of (seed, k), so
// runs are reproducible bit-for-bit across platforms and thread schedules.
// This is the splitmix64 sequence with the state advanced by the golden-ratio
// increment per draw.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(detail::mix64(seed ^ detail::mix64(stream * detail::kGolden + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next_u64() {
    ++draws_;
    return detail::mix64(base_ + draws_ * detail::kGolden);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    return next_u64() % n;
  }

  // Standard normal via Box-Muller. Consumes two uniforms per pair; fills the
  // span pairwise so a fixed-length request always consumes a fixed number of
  // draws.
  void gaussian(std::span<double> out, double sigma) {
    std::size_t i = 0;
    while (i < out.size()) {
      const double u1 = 1.0 - uniform01();  // (0, 1]
      const double u2 = uniform01();
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double a = 2.0 * std::numbers::pi * u2;
      out[i] = sigma * r * std::cos(a);
      ++i;
      if (i < out.size()) {
        out[i] = sigma * r * std::sin(a);
        ++i;
      }
    }
  }

  double gaussian(double sigma) {
    double v[1];
    gaussian(std::span<double>(v, 1), sigma);
    return v[0];
  }

  // Laplace(scale) via inverse CDF. scale = 0 degenerates to exactly 0.
  double laplace(double scale) {
    const double u = uniform01() - 0.5;
    const double mag = -std::log1p(-2.0 * std::abs(u));
    return u < 0 ? -scale * mag : scale * mag;
  }

  // Fisher-Yates shuffle driven by this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream; deterministic in (parent seed, label).
  CounterRng substream(std::uint64_t label) const {
    CounterRng child(base_, label + 1);
    return child;
  }

  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t base_;
  std::uint64_t draws_ = 0;
};

}  // namespace dpsco

#endif  // DPSCO_RNG_HPP_
