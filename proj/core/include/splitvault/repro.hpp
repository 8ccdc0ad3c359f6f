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
#ifndef SPLITVAULT_REPRO_HPP_
#define SPLITVAULT_REPRO_HPP_

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace splitvault {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool checks_passed = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::vector<std::string> details;  // measured values, one per line

  bool passed() const { return checks_passed && seconds < budget_seconds; }
};

struct ReproReport {
  std::vector<CriterionResult> criteria;
  bool all_passed() const;
};

struct ReproOptions {
  std::set<int> only;  // empty runs all
  unsigned threads = 0;
  bool verbose = true;
};

inline constexpr int kCriterionCount = 11;

// Fixture file names inside the fixture directory.
namespace fixtures {
inline constexpr const char* kVocab = "vocab6x3.nvcb";
inline constexpr const char* kGamePrompts = "game_prompts.tsv";
inline constexpr const char* kTuneCorpus = "tune20.tsv";
inline constexpr const char* kPermutation = "perm6.nprm";
inline constexpr const char* kFreqVocab = "freq_vocab.nvcb";
inline constexpr const char* kFreqIndVocab = "freq_ind.nind";
inline constexpr const char* kFreqPrivate = "freq_private.tsv";
inline constexpr const char* kFreqPublic = "freq_public.tsv";
// IndVocab for the small fixture, e.g. "ind6x3_exclude-self_0.5.nind".
std::string IndVocabName(const std::string& policy, double eps_i);
}  // namespace fixtures

// Regenerates every fixture deterministically.
void WriteFixtures(const std::filesystem::path& dir);

// Runs the acceptance criteria against a fixture directory. Throws
// kMissingFixture when a file is absent.
ReproReport RunReproductionSuite(const std::filesystem::path& fixture_dir, const ReproOptions& options = {});

// One "PASS"/"FAIL" line per criterion followed by indented details.
std::string FormatReproReport(const ReproReport& report);

}  // namespace splitvault

#endif  // SPLITVAULT_REPRO_HPP_
