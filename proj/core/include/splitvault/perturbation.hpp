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
#ifndef SPLITVAULT_PERTURBATION_HPP_
#define SPLITVAULT_PERTURBATION_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "splitvault/vocab.hpp"

namespace splitvault {

struct PerturbationStats {
  double percent_tokens_changed = 0.0;  // prompt tokens whose embedding moved, in [0, 1]
  double percent_strings_changed = 0.0;  // token strings replaced; 0 for embedding-level noise
  std::vector<double> l1_distances;        // per prompt token
  std::vector<double> bigram_cos_changes;  // per adjacent prompt pair
  std::vector<double> pairwise_cos_changes;  // sampled vocabulary pairs

  double mean_l1() const;
  double mean_bigram_cos_change() const;
  double mean_pairwise_cos_change() const;
};

struct PerturbationReport {
  PerturbationStats randomized;
  std::optional<PerturbationStats> laplace;  // same stats under i.i.d. Laplace(b) noise
  double laplace_scale = 0.0;
};

// Cosine similarity; 0 when either vector is all zeros.
double Cosine(std::span<const float> a, std::span<const float> b);

PerturbationStats MeasurePerturbation(const Vocabulary& original, const Vocabulary& perturbed,
                                      const std::vector<std::vector<std::size_t>>& prompts,
                                      std::size_t pair_samples, std::uint64_t seed);

// Adds i.i.d. Laplace(0, b) noise to every feature (inverse-CDF sampling).
Vocabulary LaplaceNoised(const Vocabulary& original, double scale, std::uint64_t seed);

// Throws kDimensionMismatch when the two matrices differ in shape or tokens.
PerturbationReport PerturbationAnalysis(const Vocabulary& original, const Vocabulary& randomized,
                                        const std::vector<std::vector<std::size_t>>& prompts,
                                        std::size_t pair_samples, std::uint64_t seed,
                                        std::optional<double> laplace_scale = std::nullopt);

}  // namespace splitvault

#endif  // SPLITVAULT_PERTURBATION_HPP_
