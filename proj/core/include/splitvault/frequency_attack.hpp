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
#ifndef SPLITVAULT_FREQUENCY_ATTACK_HPP_
#define SPLITVAULT_FREQUENCY_ATTACK_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "splitvault/adversary.hpp"

namespace splitvault {

// Observed vectors of one prompt, by position.
using ObservedPrompt = std::vector<std::vector<float>>;

// Exact bitwise fingerprint of a vector.
std::uint64_t Fingerprint(std::span<const float> v);

struct FrequencyAttackOptions {
  std::size_t k = 3;
  std::size_t min_support = 20;
};

struct FrequencyMatch {
  std::size_t rank = 0;
  std::vector<std::uint64_t> fingerprints;
  std::vector<std::size_t> tokens;
  std::size_t support = 0;         // occurrences among observations
  std::size_t public_support = 0;  // occurrences in the public corpus
};

struct FrequencyAttackResult {
  std::vector<FrequencyMatch> matches;
  // Token guessed for each (prompt, position); nullopt where nothing matched.
  std::vector<std::vector<std::optional<std::size_t>>> recovered;
};

// Codebook-style attack: k-grams of fingerprints are counted over every
// window of every prompt and ranked by (count desc, first position asc,
// first appearance asc); public token k-grams are ranked the same way and
// paired rank by rank. Pairs whose observed count is below min_support are
// dropped. Throws kArgument for k == 0.
FrequencyAttackResult FrequencyAttack(const std::vector<ObservedPrompt>& observations,
                                      const std::vector<std::vector<std::size_t>>& public_corpus,
                                      const FrequencyAttackOptions& options);

struct FrequencyAttackScore {
  std::size_t template_correct = 0;
  std::size_t template_wrong = 0;
  std::size_t body_correct = 0;
  std::size_t body_wrong = 0;
  // Prompt-mode ASR over body positions only (template excluded).
  double post_exclusion_asr = 0.0;
};

FrequencyAttackScore ScoreFrequencyAttack(const FrequencyAttackResult& result,
                                          const std::vector<std::vector<std::size_t>>& truth,
                                          std::size_t template_len,
                                          const GameThresholds& thresholds = {});

}  // namespace splitvault

#endif  // SPLITVAULT_FREQUENCY_ATTACK_HPP_
