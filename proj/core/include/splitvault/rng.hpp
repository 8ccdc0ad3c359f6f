// Copyright 2026 The Splitvault Authors
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
#ifndef SPLITVAULT_RNG_HPP_
#define SPLITVAULT_RNG_HPP_

#include <cstdint>
#include <random>

namespace splitvault {

// SplitMix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Maps 64 random bits to a double in [0, 1) using the top 53 bits.
constexpr double BitsToUnit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Counter-based generator keyed by (seed, token, feature). Each draw index
// yields an independent uniform, so cells can be evaluated in any order or
// on any thread with identical results.
class CellRng {
 public:
  CellRng(std::uint64_t seed, std::uint64_t token, std::uint64_t feature)
      : key_(Mix64(Mix64(Mix64(seed) ^ token) ^ (feature * 0xd1b54a32d192ed03ULL))) {}

  double uniform(std::uint64_t draw) const noexcept {
    return BitsToUnit(Mix64(key_ ^ Mix64(draw + 0x632be59bd9b4e019ULL)));
  }

 private:
  std::uint64_t key_;
};

// Derives a child seed; used for per-trial and per-step streams.
constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return Mix64(seed ^ Mix64(stream + 0x2545f4914f6cdd1dULL));
}

// Sequential generator used for permutations, synthesis and sampling.
// Distribution helpers avoid std:: distributions so outputs do not depend on
// the standard library implementation.
class SeqRng {
 public:
  explicit SeqRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  double uniform() { return BitsToUnit(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} / bound) * bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace splitvault

#endif  // SPLITVAULT_RNG_HPP_
