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
#ifndef SPLITVAULT_CORPUS_HPP_
#define SPLITVAULT_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "splitvault/vocab.hpp"

namespace splitvault {

// One prompt/code pair with its unit-test identifiers. Tokens are stored as
// vocabulary indices; the corpus is closed-world against its vocabulary.
struct CorpusRecord {
  std::vector<std::size_t> prompt;
  std::vector<std::size_t> code;
  std::vector<std::string> tests;
  std::optional<std::vector<bool>> pass_truth;

  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

// Text format, one record per line, TAB separated:
//   prompt tokens (space separated) \t code tokens \t test ids (';') [\t 0/1 bitmap]
// Blank lines and lines starting with '#' are skipped.
std::vector<CorpusRecord> ParseCorpus(const std::string& text,
                                      const Vocabulary& vocab);
std::string FormatCorpus(const std::vector<CorpusRecord>& records,
                         const Vocabulary& vocab);

std::vector<CorpusRecord> LoadCorpus(const std::filesystem::path& path,
                                     const Vocabulary& vocab);
void SaveCorpus(const std::vector<CorpusRecord>& records,
                const Vocabulary& vocab, const std::filesystem::path& path);

// Prompts only, in record order.
std::vector<std::vector<std::size_t>> Prompts(
    const std::vector<CorpusRecord>& records);

}  // namespace splitvault

#endif  // SPLITVAULT_CORPUS_HPP_
