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
#include "splitvault/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "splitvault/error.hpp"

namespace splitvault {
namespace {

// log(1 + e^x) without overflow.
double Softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void CheckEpsVocab(double epsilon, std::size_t vocab_size) {
  if (!(epsilon >= 0.0) || std::isnan(epsilon)) {
    throw Error(ErrorKind::kArgument, fmt::format("epsilon must be >= 0 (got {})", epsilon));
  }
  if (vocab_size < 2) {
    throw Error(ErrorKind::kArgument, fmt::format("|V| must be >= 2 (got {})", vocab_size));
  }
}

}  // namespace

TokenBound TokenInferenceBounds(double epsilon, std::size_t vocab_size) {
  CheckEpsVocab(epsilon, vocab_size);
  const double log_psi = std::log(static_cast<double>(vocab_size - 1));
  TokenBound b;
  b.epsilon = epsilon;
  b.vocab_size = vocab_size;
  if (std::isinf(epsilon)) {
    b.upper = 1.0;
    b.lower = 0.0;
    return b;
  }
  b.upper = std::exp(-Softplus(log_psi - epsilon));
  b.lower = std::exp(-Softplus(log_psi + epsilon));
  return b;
}

std::size_t CorrectTokenCount(double rho, std::size_t prompt_len) {
  const double c = std::ceil(rho * static_cast<double>(prompt_len) - 1e-9);
  return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(prompt_len)));
}

PromptBoundReport PromptReconstructionBound(const PromptBoundParams& p) {
  CheckEpsVocab(p.epsilon, p.vocab_size);
  if (p.prompt_len < 1) throw Error(ErrorKind::kArgument, "|x| must be >= 1");
  if (!(p.rho > 0.0 && p.rho <= 1.0)) {
    throw Error(ErrorKind::kArgument, fmt::format("rho must be in (0, 1] (got {})", p.rho));
  }
  if (!(p.gamma >= 0.0 && p.gamma <= 1.0)) {
    throw Error(ErrorKind::kArgument, fmt::format("gamma must be in [0, 1] (got {})", p.gamma));
  }
  PromptBoundReport r;
  r.params = p;
  r.correct = CorrectTokenCount(p.rho, p.prompt_len);
  const double psi = static_cast<double>(p.vocab_size - 1);
  const double em = std::exp(-p.epsilon);  // e^-eps, divides through numerator and denominator
  const double a0 = (psi + em) / (psi + psi * psi * em);
  const double b0 = psi / (psi + em);
  r.correct_factor = a0 + p.gamma;
  r.incorrect_factor = b0 - p.gamma;
  const std::size_t wrong = p.prompt_len - r.correct;
  r.vacuous = (r.correct > 0 && r.correct_factor > 1.0) ||
              (wrong > 0 && r.incorrect_factor < 0.0);
  if (r.vacuous) {
    r.log_value = 0.0;
  } else {
    // log1p forms keep precision when the factors are near 1.
    const double log_a = p.gamma == 0.0
                             ? std::log(psi + em) - std::log(psi) - std::log1p(psi * em)
                             : std::log(r.correct_factor);
    const double log_b = p.gamma == 0.0 ? -std::log1p(em / psi) : std::log(r.incorrect_factor);
    r.log_value = (r.correct ? static_cast<double>(r.correct) * log_a : 0.0) +
                  (wrong ? static_cast<double>(wrong) * log_b : 0.0);
  }
  r.value = std::exp(r.log_value);
  r.log10_value = r.log_value / std::log(10.0);
  return r;
}

std::vector<double> PositionAccuracies(const std::vector<std::vector<std::size_t>>& prompts,
                                       const SequentialAttacker& attacker) {
  if (prompts.empty()) throw Error(ErrorKind::kEmptyCorpus, "gamma estimation needs a non-empty corpus");
  std::size_t longest = 0;
  for (const auto& x : prompts) longest = std::max(longest, x.size());
  std::vector<double> hits(longest, 0.0);
  std::vector<std::size_t> previous;
  for (std::size_t r = 0; r < prompts.size(); ++r) {
    previous.clear();
    for (std::size_t j = 0; j < prompts[r].size(); ++j) {
      const std::size_t guess = attacker(r, j, previous);
      if (guess == prompts[r][j]) hits[j] += 1.0;
      previous.push_back(guess);
    }
  }
  for (auto& h : hits) h /= static_cast<double>(prompts.size());
  return hits;
}

double EstimateGamma(const std::vector<std::vector<std::size_t>>& prompts,
                     const SequentialAttacker& attacker) {
  const auto acc = PositionAccuracies(prompts, attacker);
  return acc.empty() ? 0.0 : *std::max_element(acc.begin(), acc.end());
}

BruteForceTime BruteForceYearsLog(double log_p, double rate) {
  if (!(log_p <= 0.0)) {
    throw Error(ErrorKind::kArgument, "success probability must be in (0, 1]");
  }
  if (std::isinf(log_p)) throw Error(ErrorKind::kArgument, "success probability must be > 0");
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw Error(ErrorKind::kArgument, fmt::format("guess rate must be > 0 (got {})", rate));
  }
  const double log_full = -log_p - std::log(rate) - std::log(kSecondsPerYear);
  BruteForceTime t;
  t.years_full_space = std::exp(log_full);
  t.years = 0.5 * t.years_full_space;
  return t;
}

BruteForceTime BruteForceYears(double p, double rate) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::kArgument, fmt::format("success probability must be in (0, 1] (got {})", p));
  }
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw Error(ErrorKind::kArgument, fmt::format("guess rate must be > 0 (got {})", rate));
  }
  BruteForceTime t;
  t.years_full_space = (1.0 / p) / rate / kSecondsPerYear;
  t.years = 0.5 * t.years_full_space;
  return t;
}

}  // namespace splitvault
