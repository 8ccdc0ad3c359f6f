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
#ifndef SPLITVAULT_LTOKENIZER_HPP_
#define SPLITVAULT_LTOKENIZER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splitvault/vocab.hpp"

namespace splitvault {

// Secret bijection original token index -> local index. Only (size, seed)
// are persisted; both arrays are regenerated on load.
struct TokenPermutation {
  std::size_t size = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> forward;
  std::vector<std::size_t> inverse;

  friend bool operator==(const TokenPermutation&, const TokenPermutation&) = default;
};

// Fisher-Yates over SeqRng(seed). Throws kArgument for size 0.
TokenPermutation GeneratePermutation(std::size_t size, std::uint64_t seed);
TokenPermutation IdentityPermutation(std::size_t size);

inline constexpr std::uint16_t kPermutationFormatVersion = 1;

std::vector<std::uint8_t> SerializePermutation(const TokenPermutation& perm);
TokenPermutation ParsePermutation(std::span<const std::uint8_t> bytes);
TokenPermutation LoadPermutation(const std::filesystem::path& path);
void SavePermutation(const TokenPermutation& perm, const std::filesystem::path& path);

// Greedy longest match, left to right. Whitespace not in the vocabulary is
// skipped; any other unmatched byte throws UnsegmentableError.
std::vector<std::string> Segment(std::string_view text, const Vocabulary& vocab);

std::vector<std::size_t> Encode(std::span<const std::string> tokens,
                                const TokenPermutation& perm, const Vocabulary& vocab);
// Index-level variants for already-resolved sequences.
std::vector<std::size_t> EncodeIndices(std::span<const std::size_t> original,
                                       const TokenPermutation& perm);
std::vector<std::size_t> DecodeIndices(std::span<const std::size_t> local,
                                       const TokenPermutation& perm);
std::vector<std::string> Decode(std::span<const std::size_t> local,
                                const TokenPermutation& perm, const Vocabulary& vocab);

}  // namespace splitvault

#endif  // SPLITVAULT_LTOKENIZER_HPP_
