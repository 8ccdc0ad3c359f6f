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
#ifndef SPLITVAULT_VOCAB_HPP_
#define SPLITVAULT_VOCAB_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace splitvault {

// A token set paired with a |V| x m embedding matrix stored row-major as
// 32-bit floats. Immutable after construction.
//
// Invariants: tokens are unique, |V| >= 2, m >= 1, every value is finite.
class Vocabulary {
 public:
  // Validates and takes ownership. Throws kValidation on duplicates,
  // non-finite values or size mismatch.
  Vocabulary(std::vector<std::string> tokens, std::vector<float> embeddings,
             std::size_t dim);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& token(std::size_t t) const;
  std::span<const float> row(std::size_t t) const;
  float value(std::size_t t, std::size_t feature) const;
  std::span<const float> matrix() const noexcept { return embeddings_; }

  // Copy of feature column i.
  std::vector<float> column(std::size_t feature) const;

  std::optional<std::size_t> find(std::string_view token) const;
  // Throws UnknownTokenError when absent.
  std::size_t index_of(std::string_view token) const;

  // Same tokens, different matrix (used for randomized copies).
  Vocabulary with_embeddings(std::vector<float> embeddings) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b);

 private:
  std::vector<std::string> tokens_;
  std::vector<float> embeddings_;
  std::size_t dim_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::uint16_t kVocabFormatVersion = 1;

// NVCB layout: "NVCB", u16 version, u32 |V|, u32 m, |V| x (u32 len, bytes),
// |V| x m f32 little-endian row-major.
std::vector<std::uint8_t> SerializeVocabulary(const Vocabulary& vocab);
Vocabulary ParseVocabulary(std::span<const std::uint8_t> bytes);

Vocabulary LoadVocabulary(const std::filesystem::path& path);
void SaveVocabulary(const Vocabulary& vocab, const std::filesystem::path& path);

// Deterministic synthetic vocabulary: tokens "tok0000", "tok0001", ...;
// features uniform in [-scale, scale]. size >= 2, dim >= 1, scale > 0.
Vocabulary SynthVocabulary(std::size_t size, std::size_t dim,
                           std::uint64_t seed, double scale);

}  // namespace splitvault

#endif  // SPLITVAULT_VOCAB_HPP_
