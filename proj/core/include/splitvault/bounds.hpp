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
#ifndef SPLITVAULT_BOUNDS_HPP_
#define SPLITVAULT_BOUNDS_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace splitvault {

// Probability that an arbitrary token is the ground truth given one
// randomized observation, for an eps-IND vocabulary of the given size.
struct TokenBound {
  double epsilon = 0.0;
  std::size_t vocab_size = 0;
  double lower = 0.0;  // 1 / (1 + (|V|-1) e^eps)
  double upper = 0.0;  // e^eps / (e^eps + |V| - 1)
};

TokenBound TokenInferenceBounds(double epsilon, std::size_t vocab_size);

struct PromptBoundParams {
  double epsilon = 0.0;
  std::size_t vocab_size = 2;
  std::size_t prompt_len = 1;
  double rho = 1.0;    // (0, 1]
  double gamma = 0.0;  // [0, 1]
};

struct PromptBoundReport {
  PromptBoundParams params;
  std::size_t correct = 0;  // ceil(rho |x|)
  double correct_factor = 0.0;    // per-token factor for the correct positions, gamma included
  double incorrect_factor = 0.0;  // same for the remaining positions
  bool vacuous = false;           // a factor left [0, 1]; value reported as 1
  double log_value = 0.0;
  double value = 0.0;
  double log10_value = 0.0;
};

// ceil(rho * n) with a 1e-9 slack so products such as 0.2 * 200 stay exact.
std::size_t CorrectTokenCount(double rho, std::size_t prompt_len);

// A^C * B^(|x|-C) with
//   A = (psi e^eps + 1) / (psi e^eps + psi^2) + gamma,
//   B = psi e^eps / (psi e^eps + 1) - gamma,   psi = |V| - 1,
// evaluated in log space. gamma = 0 gives the sequence-independent bound.
PromptBoundReport PromptReconstructionBound(const PromptBoundParams& params);

// Guess for position j of record r given the attacker's own earlier guesses
// for that record. The attacker closes over whatever it observes.
using SequentialAttacker = std::function<std::size_t(
    std::size_t record, std::size_t position, std::span<const std::size_t> previous)>;

// max_j (1/|D|) sum_x 1[guess_j == x_j]. Records shorter than j count as
// misses at j. Throws kEmptyCorpus.
double EstimateGamma(const std::vector<std::vector<std::size_t>>& prompts,
                     const SequentialAttacker& attacker);
// Per-position accuracies used by EstimateGamma.
std::vector<double> PositionAccuracies(const std::vector<std::vector<std::size_t>>& prompts,
                                       const SequentialAttacker& attacker);

inline constexpr double kSecondsPerYear = 31'557'600.0;

struct BruteForceTime {
  double years = 0.0;            // expected: half the search space
  double years_full_space = 0.0;  // without the 1/2 factor
};

BruteForceTime BruteForceYears(double success_probability, double guesses_per_second);
// Same, with p given as log(p) so probabilities below the double range work.
BruteForceTime BruteForceYearsLog(double log_success_probability, double guesses_per_second);

}  // namespace splitvault

#endif  // SPLITVAULT_BOUNDS_HPP_
