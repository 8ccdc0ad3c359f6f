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
#ifndef SPLITVAULT_ARR_HPP_
#define SPLITVAULT_ARR_HPP_

// Adaptive randomized response over vocabulary embedding columns.
//
// For token t and feature i the mechanism keeps e^i_t with probability
//   p_i = exp(beta_i) / (exp(beta_i) + |V| - 1)
// and otherwise replaces it by e^i_k (k != t) with probability
//   q_{i,k} = (|V| - 1) q_k / (exp(beta_i) + |V| - 1),
//   q_k     = exp(-|e^i_t - e^i_k| / m) / Z_t.
// beta_i is always the upper end of its feasibility band
//   [ln(|V|-1) + ln(max_k w_k / Z_t),  eps_i + ln(|V|-1) + ln(min_k w_k / Z_t)],
// which is nonempty iff eps_i >= (Dmax - Dmin) / m.
//
// The normalizer Z_t is chosen by DenominatorPolicy:
//   kPaperVerbatim  Z_t sums over all of V, including t itself (weight 1).
//                   The replacement masses then sum to less than 1 - p_i and
//                   the residual is added to the keep outcome.
//   kExcludeSelf    Z_t sums over V \ {t}; the distribution sums to 1 as is.
// The beta bounds use the same Z_t as the sampler.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "splitvault/rng.hpp"
#include "splitvault/vocab.hpp"

namespace splitvault {

enum class DenominatorPolicy : std::uint8_t {
  kPaperVerbatim = 0,
  kExcludeSelf = 1,
};

const char* ToString(DenominatorPolicy policy);
DenominatorPolicy ParseDenominatorPolicy(const std::string& name);

// Per-feature budgets; total is their sum.
struct BudgetPlan {
  double total_epsilon = 0.0;
  std::vector<double> per_feature;

  // eps / m on every feature.
  static BudgetPlan Uniform(double total_epsilon, std::size_t dim);
  static BudgetPlan FromSplit(std::vector<double> per_feature);

  // Throws kArgument if any eps_i < 0, the sum deviates from total by more
  // than 1e-12 relative, or the length differs from dim.
  void Validate(std::size_t dim) const;
};

// Exact sum of per-feature budgets (sequential composition).
double ComposeBudget(std::span<const double> per_feature);

struct BetaBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Output distribution over bitwise-distinct values.
struct FeatureDistribution {
  std::vector<float> support;
  std::vector<double> probabilities;
};

// Probability of emitting each token's value for one (token, feature):
// token_probabilities[k] is q_{i,k} for k != token and the keep mass for
// k == token. Several tokens may share a value; see ExactFeatureDistribution.
struct OutcomeDistribution {
  std::size_t token = 0;
  double beta = 0.0;
  double keep = 0.0;
  std::vector<double> token_probabilities;
};

// Precomputed state for one feature column: values sorted once, prefix
// log-sum-exp of +v/m and suffix log-sum-exp of -v/m, so each token's
// normalizer and every sample cost O(log |V|).
class ColumnModel {
 public:
  ColumnModel(std::span<const float> column, std::size_t dim, double eps_i,
              DenominatorPolicy policy);

  std::size_t size() const noexcept { return values_.size(); }
  double epsilon() const noexcept { return eps_; }
  DenominatorPolicy policy() const noexcept { return policy_; }
  float value(std::size_t t) const { return values_[t]; }

  double min_feasible_epsilon(std::size_t t) const;
  bool feasible(std::size_t t) const;
  // Throws InfeasibleBudgetError for t when infeasible.
  BetaBounds beta_bounds(std::size_t t) const;
  double beta(std::size_t t) const { return beta_bounds(t).upper; }

  double keep_probability(std::size_t t) const;
  // q_{i,k} for k != t.
  double replacement_probability(std::size_t t, std::size_t k) const;
  OutcomeDistribution outcome(std::size_t t) const;

  // P[ARR(e_t) = z], aggregating all tokens whose value is bitwise z.
  double probability_of_value(std::size_t t, float z) const;
  // Bitwise-distinct values of the column, ascending.
  std::vector<float> distinct_values() const;

  // One draw for token t; draws 0 and 1 of rng are consumed.
  float sample(std::size_t t, const CellRng& rng) const;

 private:
  double log_z_excl(std::size_t t) const;
  double log_z_policy(std::size_t t) const;
  double log_replace_unit(std::size_t t) const;
  void require_feasible(std::size_t t) const;

  std::vector<float> values_;          // by token
  double inv_m_;
  double eps_;
  DenominatorPolicy policy_;
  double log_psi_;
  std::vector<std::size_t> order_;     // sorted position -> token
  std::vector<std::size_t> pos_;       // token -> sorted position
  std::vector<double> sorted_;         // sorted values
  std::vector<double> prefix_;         // lse_{l<=j} sorted_[l]/m
  std::vector<double> suffix_;         // lse_{l>=j} -sorted_[l]/m, size V+1
  std::vector<double> dmin_, dmax_, log_z_excl_;
  std::vector<std::pair<std::uint32_t, std::size_t>> multiplicity_;  // bits -> count, sorted
};

double MinFeasibleEpsilon(const Vocabulary& vocab, std::size_t token,
                          std::size_t feature);
BetaBounds ComputeBetaBounds(const Vocabulary& vocab, std::size_t token,
                             std::size_t feature, double eps_i,
                             DenominatorPolicy policy);
OutcomeDistribution ArrProbabilities(const Vocabulary& vocab, std::size_t token,
                                     std::size_t feature, double eps_i,
                                     DenominatorPolicy policy);
float RandomizeFeature(const Vocabulary& vocab, std::size_t token,
                       std::size_t feature, double eps_i,
                       DenominatorPolicy policy, std::uint64_t seed);

// Minimal total budget under which every cell is feasible with a uniform
// split: m * max_{t,i} (Dmax - Dmin) / m.
double MinimalUniformTotalEpsilon(const Vocabulary& vocab);

inline constexpr std::size_t kExactAuditMaxVocab = 4096;

// Throws kTooLarge above kExactAuditMaxVocab.
FeatureDistribution ExactFeatureDistribution(const Vocabulary& vocab,
                                             std::size_t token,
                                             std::size_t feature, double eps_i,
                                             DenominatorPolicy policy);

struct EffectiveEpsilon {
  std::vector<double> per_feature;
  double total = 0.0;
};

// Ground-truth indistinguishability of the implemented mechanism: for each
// feature, the max over outputs z and token pairs of
// ln(P[ARR(e_t)=z] / P[ARR(e_t')=z]); +inf when some token reaches z and
// another cannot.
EffectiveEpsilon MeasureEffectiveEpsilon(const Vocabulary& vocab,
                                         const BudgetPlan& plan,
                                         DenominatorPolicy policy);

}  // namespace splitvault

#endif  // SPLITVAULT_ARR_HPP_
