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
#ifndef SPLITVAULT_ADVERSARY_HPP_
#define SPLITVAULT_ADVERSARY_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitvault/arr.hpp"
#include "splitvault/indvocab.hpp"
#include "splitvault/vocab.hpp"

namespace splitvault {

struct BayesPosterior {
  std::vector<double> probabilities;  // sums to 1
  std::size_t argmax = 0;             // lowest index among ties
};

// Worst-case token attacker: knows the source vocabulary, the budget plan and
// the policy, and computes the exact uniform-prior posterior of a randomized
// row. Per-feature likelihood tables are built once (|V| <= 4096).
class BayesAttacker {
 public:
  BayesAttacker(const Vocabulary& source, const BudgetPlan& plan, DenominatorPolicy policy);

  // Throws kZeroLikelihood if no token can produce the row, kDimensionMismatch
  // for a wrong-length row.
  BayesPosterior posterior(std::span<const float> observed) const;
  std::size_t guess(std::span<const float> observed) const;

  std::size_t vocab_size() const noexcept { return n_; }

  // Exact expected accuracy of guess() for a uniformly drawn token,
  // enumerating every output row. Throws kTooLarge above max_outputs rows.
  double expected_accuracy(std::size_t max_outputs = 1'000'000) const;

 private:
  struct FeatureTable {
    std::vector<std::uint32_t> bits;      // distinct output values, sorted by bits
    std::vector<double> log_likelihood;   // [value * n + token]
    std::vector<double> likelihood;
  };
  std::size_t n_;
  std::vector<FeatureTable> tables_;
};

// Accuracy of a BayesAttacker averaged over tokens (exact).
double ExpectedBayesAccuracy(const Vocabulary& source, const BudgetPlan& plan,
                             DenominatorPolicy policy);

// Token guess for one observed row at a position of a trial.
using TokenAttacker = std::function<std::size_t(std::span<const float> observed,
                                                std::size_t trial, std::size_t position)>;

TokenAttacker MakeBayesTokenAttacker(std::shared_ptr<const BayesAttacker> attacker);
// Uniform random guesses keyed by (seed, trial, position).
TokenAttacker MakeUniformGuesser(std::size_t vocab_size, std::uint64_t seed);

struct GameCounts {
  std::vector<std::size_t> correct;  // C per trial
  std::vector<std::size_t> length;   // |x| per trial
};

struct GameResult {
  double rho = 0.0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double probability = 0.0;
  double sigma = 0.0;  // binomial standard error of probability
  double ci_low = 0.0;
  double ci_high = 0.0;  // probability +- 3 sigma, clamped to [0, 1]
};

struct GameOptions {
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

// Trial k uses prompt k mod |prompts| and build seed DeriveSeed(seed, k); the
// attacker sees each randomized row of the prompt and guesses independently.
GameCounts PlayReconstructionGame(const std::vector<std::vector<std::size_t>>& prompts,
                                  const IndVocabBuilder& builder, const TokenAttacker& attacker,
                                  std::size_t trials, GameOptions options = {});

// Fraction of trials with C / |x| >= rho.
GameResult EvaluateGame(const GameCounts& counts, double rho);

GameResult ReconstructionGame(const std::vector<std::vector<std::size_t>>& prompts,
                              const IndVocabBuilder& builder, const TokenAttacker& attacker,
                              double rho, std::size_t trials, GameOptions options = {});

// --- attack success scoring -------------------------------------------------

struct GameThresholds {
  double rho_b = 20.0;   // Bleu, 0..100
  double rho_r = 0.4;    // Rouge F1, 0..1
  double rho_f = 0.0;    // Fusi, win iff strictly greater
  double rho_cb = 20.0;  // simplified CodeBleu, 0..100

  void Validate() const;
};

enum class AsrMode { kPrompt, kCode };

struct AsrRecordScore {
  double bleu = 0.0;
  double rouge = 0.0;
  double code_bleu = 0.0;
  std::optional<double> fusi;
  bool privacy = false;
  bool confidentiality = false;
  std::optional<bool> functionality;  // absent when Fusi is undefined or not supplied
};

struct AsrReport {
  AsrMode mode = AsrMode::kPrompt;
  double privacy = 0.0;
  double confidentiality = 0.0;
  double functionality = 0.0;
  std::size_t functionality_records = 0;
  std::vector<AsrRecordScore> records;
};

struct AsrInput {
  std::vector<std::vector<std::string>> truth;
  // Several reconstructions per record; each record is scored by its best.
  std::vector<std::vector<std::vector<std::string>>> reconstructions;
  // Code mode, optional: pass rows of the truth and of each reconstruction.
  std::vector<std::vector<bool>> truth_pass;
  std::vector<std::vector<std::vector<bool>>> reconstruction_pass;
};

AsrReport ComputeAsr(const AsrInput& input, const GameThresholds& thresholds, AsrMode mode);

// key: value blocks, one per record, preceded by the rates.
std::string FormatAsrReport(const AsrReport& report);

}  // namespace splitvault

#endif  // SPLITVAULT_ADVERSARY_HPP_
