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
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "splitvault/bounds.hpp"

using namespace splitvault;
using svt::KindOf;

namespace {
// Closed forms written out directly (no log-space tricks).
double TokenUpper(double eps, double v) { return std::exp(eps) / (std::exp(eps) + v - 1); }
double Eq4(double eps, double v, std::size_t len, std::size_t c) {
  const double psi = v - 1, pe = psi * std::exp(eps);
  return std::pow((pe + 1) / (pe + psi * psi), double(c)) * std::pow(pe / (pe + 1), double(len - c));
}
}  // namespace

TEST_SUITE("privacy-bounds") {
  TEST_CASE("token bounds") {
    for (std::size_t v : {2u, 6u, 1000u, 151000u}) {
      const auto b = TokenInferenceBounds(0.0, v);
      CHECK(b.lower == doctest::Approx(1.0 / v).epsilon(1e-15));
      CHECK(b.upper == doctest::Approx(1.0 / v).epsilon(1e-15));
    }
    const auto two = TokenInferenceBounds(std::log(2.0), 2);
    CHECK(two.upper == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(two.lower == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    // Frozen from a 50-digit evaluation.
    const auto big = TokenInferenceBounds(13.0, 32000);
    CHECK(big.upper == doctest::Approx(0.93255024417785800).epsilon(1e-14));
    CHECK(big.lower == doctest::Approx(7.0637501385e-11).epsilon(1e-9));
    CHECK(KindOf([] { TokenInferenceBounds(-1.0, 6); }) == ErrorKind::kArgument);
    CHECK(KindOf([] { TokenInferenceBounds(1.0, 1); }) == ErrorKind::kArgument);
  }

  TEST_CASE("token bound ordering and limits") {
    for (std::size_t v : {2u, 6u, 32000u}) {
      double prev_up = 0, prev_lo = 1;
      for (double eps = 0; eps <= 40; eps += 0.25) {
        const auto b = TokenInferenceBounds(eps, v);
        CHECK(b.lower <= 1.0 / v + 1e-15);
        CHECK(b.upper >= 1.0 / v - 1e-15);
        CHECK(b.upper >= prev_up);
        CHECK(b.lower <= prev_lo);
        prev_up = b.upper;
        prev_lo = b.lower;
      }
      CHECK(TokenInferenceBounds(1e-12, v).upper == doctest::Approx(1.0 / v));
      CHECK(TokenInferenceBounds(200.0, v).upper == doctest::Approx(1.0));
    }
  }

  TEST_CASE("anchor values") {
    // Frozen from a 50-digit evaluation of the closed form.
    const auto a = PromptReconstructionBound({13.0, 151000, 200, 0.2, 0.146});
    CHECK(a.correct == 40);
    CHECK(a.value == doctest::Approx(1.0937452621e-13).epsilon(1e-8));
    CHECK(a.value < 5.5e-11);
    const auto b = PromptReconstructionBound({13.0, 151000, 200, 0.4, 0.146});
    CHECK(b.correct == 80);
    CHECK(b.value == doctest::Approx(6.1130540153e-13).epsilon(1e-8));
    CHECK(b.value < 5.5e-11);
  }

  TEST_CASE("gamma zero reduces to the plain product form") {
    SeqRng rng(3);
    for (int k = 0; k < 100; ++k) {
      const double eps = rng.uniform(0.0, 8.0);
      const std::size_t v = 2 + rng.below(50), len = 1 + rng.below(30);
      const double rho = 0.05 + 0.95 * rng.uniform();
      const auto r = PromptReconstructionBound({eps, v, len, rho, 0.0});
      CHECK(r.value == doctest::Approx(Eq4(eps, double(v), len, CorrectTokenCount(rho, len))).epsilon(1e-11));
      CHECK_FALSE(r.vacuous);
    }
  }

  TEST_CASE("all-correct case relative to the token bound") {
    // The closed form's first factor is not the token upper bound, so only
    // the ordering holds: (psi e^eps + 1)/(psi e^eps + psi^2) >= e^eps/(e^eps + psi).
    SeqRng rng(4);
    for (int k = 0; k < 100; ++k) {
      const double eps = rng.uniform(0.0, 10.0);
      const std::size_t v = 2 + rng.below(1000), len = 1 + rng.below(20);
      const auto r = PromptReconstructionBound({eps, v, len, 1.0, 0.0});
      CHECK(r.value >= std::pow(TokenUpper(eps, double(v)), double(len)) * (1 - 1e-12));
    }
    // With |V| = 2 the first factor is exactly 1.
    CHECK(PromptReconstructionBound({3.0, 2, 5, 1.0, 0.0}).value == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("rounding of rho|x|") {
    CHECK(CorrectTokenCount(0.2, 200) == 40);
    CHECK(CorrectTokenCount(0.25, 8) == 2);
    CHECK(CorrectTokenCount(0.3, 8) == 3);
    CHECK(CorrectTokenCount(1.0, 8) == 8);
    CHECK(CorrectTokenCount(0.0, 8) == 0);
  }

  TEST_CASE("monotonicity in length and epsilon; gamma direction") {
    for (double eps : {0.5, 2.0, 8.0}) {
      double prev = 2;
      for (std::size_t len = 1; len <= 60; ++len) {
        const double v = PromptReconstructionBound({eps, 100, len, 0.5, 0.0}).value;
        CHECK(v <= prev * (1 + 1e-12));
        prev = v;
      }
    }
    double prev = 0;
    for (double eps = 0; eps < 30; eps += 0.5) {
      const double v = PromptReconstructionBound({eps, 100, 20, 0.4, 0.0}).value;
      CHECK(v >= prev * (1 - 1e-12));
      prev = v;
    }
    // Gamma moves mass from the incorrect factor to the correct one; at the
    // anchor it lowers the bound.
    const double g0 = PromptReconstructionBound({13.0, 151000, 200, 0.2, 0.0}).value;
    const double g1 = PromptReconstructionBound({13.0, 151000, 200, 0.2, 0.146}).value;
    CHECK(g1 < g0);
  }

  TEST_CASE("vacuous and invalid parameters") {
    const auto r = PromptReconstructionBound({20.0, 6, 8, 0.5, 0.9});
    CHECK(r.vacuous);
    CHECK(r.value == 1.0);
    CHECK(KindOf([] { PromptReconstructionBound({1.0, 6, 8, 0.0, 0.0}); }) == ErrorKind::kArgument);
    CHECK(KindOf([] { PromptReconstructionBound({1.0, 6, 8, 1.5, 0.0}); }) == ErrorKind::kArgument);
    CHECK(KindOf([] { PromptReconstructionBound({1.0, 6, 8, 0.5, -0.1}); }) == ErrorKind::kArgument);
    CHECK(KindOf([] { PromptReconstructionBound({1.0, 6, 0, 0.5, 0.0}); }) == ErrorKind::kArgument);
  }

  TEST_CASE("gamma estimation") {
    const std::vector<std::vector<std::size_t>> corpus{{0, 1, 2}, {3, 4}, {5, 0, 1, 2}};
    CHECK(EstimateGamma(corpus, [&](std::size_t r, std::size_t j, auto) { return corpus[r][j]; }) == 1.0);
    CHECK(EstimateGamma(corpus, [](std::size_t, std::size_t, auto) { return std::size_t{99}; }) == 0.0);
    // Attacker right only on position 1 of the first two records: 2 of 3.
    const auto attacker = [&](std::size_t r, std::size_t j, auto) { return j == 1 && r < 2 ? corpus[r][j] : 99; };
    const auto acc = PositionAccuracies(corpus, attacker);
    CHECK(acc.size() == 4);
    CHECK(acc[1] == doctest::Approx(2.0 / 3.0));
    CHECK(EstimateGamma(corpus, attacker) == doctest::Approx(2.0 / 3.0));
    CHECK(KindOf([] { EstimateGamma({}, [](std::size_t, std::size_t, auto) { return std::size_t{0}; }); }) ==
          ErrorKind::kEmptyCorpus);
  }

  TEST_CASE("the attacker sees its own previous outputs") {
    const std::vector<std::vector<std::size_t>> corpus{{4, 4, 4}};
    std::vector<std::size_t> seen_len;
    EstimateGamma(corpus, [&](std::size_t, std::size_t j, std::span<const std::size_t> prev) {
      seen_len.push_back(prev.size());
      return j == 0 ? std::size_t{4} : prev.back();
    });
    CHECK(seen_len == std::vector<std::size_t>{0, 1, 2});
  }

  TEST_CASE("brute force years") {
    const auto t = BruteForceYears(std::pow(26.0, -8.0), 1.0);
    CHECK(std::abs(t.years - 3308.65) <= 0.1);
    CHECK(t.years == doctest::Approx(3308.66518).epsilon(1e-8));
    CHECK(BruteForceYears(1.0, 1.0).years == doctest::Approx(0.5 / 31557600.0).epsilon(1e-15));
    const auto big = BruteForceYearsLog(-72.0 * std::log(26.0), 1.0);
    CHECK(big.years == doctest::Approx(1.19659e94).epsilon(1e-5));
    CHECK(big.years_full_space == doctest::Approx(2.39319e94).epsilon(1e-5));
    CHECK(KindOf([] { BruteForceYears(0.0, 1.0); }) == ErrorKind::kArgument);
    CHECK(KindOf([] { BruteForceYears(1.5, 1.0); }) == ErrorKind::kArgument);
    CHECK(KindOf([] { BruteForceYears(0.5, 0.0); }) == ErrorKind::kArgument);
  }
}
