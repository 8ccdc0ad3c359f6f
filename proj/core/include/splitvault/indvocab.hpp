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
#ifndef SPLITVAULT_INDVOCAB_HPP_
#define SPLITVAULT_INDVOCAB_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "splitvault/arr.hpp"
#include "splitvault/vocab.hpp"

namespace splitvault {

using Digest = std::array<std::uint8_t, 32>;

// SHA-256 of the vocabulary's binary serialization.
Digest VocabularyDigest(const Vocabulary& vocab);
std::string DigestHex(const Digest& digest);

// A vocabulary whose embeddings were randomized once, cell by cell.
struct IndVocab {
  Vocabulary randomized;
  BudgetPlan plan;
  std::uint64_t seed = 0;
  DenominatorPolicy policy = DenominatorPolicy::kExcludeSelf;
  Digest source_digest{};

  friend bool operator==(const IndVocab& a, const IndVocab& b) {
    return a.randomized == b.randomized &&
           a.plan.total_epsilon == b.plan.total_epsilon &&
           a.plan.per_feature == b.plan.per_feature && a.seed == b.seed &&
           a.policy == b.policy && a.source_digest == b.source_digest;
  }
};

struct BuildOptions {
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

// Column models prepared once, for repeated builds with different seeds.
class IndVocabBuilder {
 public:
  // Throws InfeasibleBudgetError listing every infeasible cell.
  IndVocabBuilder(const Vocabulary& vocab, const BudgetPlan& plan, DenominatorPolicy policy);

  IndVocab build(std::uint64_t seed, BuildOptions options = {}) const;
  // Randomized row for one token, identical to build(seed).randomized.row(token).
  std::vector<float> randomize_row(std::size_t token, std::uint64_t seed) const;

  const Vocabulary& source() const noexcept { return vocab_; }

 private:
  Vocabulary vocab_;
  BudgetPlan plan_;
  DenominatorPolicy policy_;
  std::vector<ColumnModel> models_;
  Digest digest_;
};

// Throws InfeasibleBudgetError listing every infeasible cell. Output depends
// only on (vocab, plan, seed, policy), never on the thread count.
IndVocab BuildIndVocab(const Vocabulary& vocab, const BudgetPlan& plan,
                       std::uint64_t seed, DenominatorPolicy policy,
                       BuildOptions options = {});

inline constexpr std::uint16_t kIndVocabFormatVersion = 1;

std::vector<std::uint8_t> SerializeIndVocab(const IndVocab& ind);
IndVocab ParseIndVocab(std::span<const std::uint8_t> bytes);
IndVocab LoadIndVocab(const std::filesystem::path& path);
void SaveIndVocab(const IndVocab& ind, const std::filesystem::path& path);

struct IndVocabAudit {
  bool digest_ok = false;
  bool tokens_ok = false;
  bool support_ok = false;
  bool rebuild_ok = false;        // rebuilding from (source, plan, seed) is bitwise equal
  std::size_t foreign_cells = 0;  // cells whose value is absent from the source column
  EffectiveEpsilon effective;
  std::vector<bool> within_budget;  // per feature, effective <= eps_i + tolerance
  bool ind_ok = false;

  bool ok() const { return digest_ok && tokens_ok && support_ok && rebuild_ok && ind_ok; }
};

inline constexpr double kIndAuditTolerance = 1e-9;

// Checks an IndVocab against its claimed source. The effective-epsilon part
// needs |V| <= kExactAuditMaxVocab and is skipped (ind_ok false) above that.
IndVocabAudit AuditIndVocab(const IndVocab& ind, const Vocabulary& source);

}  // namespace splitvault

#endif  // SPLITVAULT_INDVOCAB_HPP_
