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
#include "splitvault/vocab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <fmt/format.h>

#include "splitvault/binary_io.hpp"
#include "splitvault/error.hpp"
#include "splitvault/rng.hpp"

namespace splitvault {

Vocabulary::Vocabulary(std::vector<std::string> tokens,
                       std::vector<float> embeddings, std::size_t dim)
    : tokens_(std::move(tokens)), embeddings_(std::move(embeddings)), dim_(dim) {
  if (tokens_.size() < 2) {
    throw Error(ErrorKind::kValidation, "vocabulary needs at least 2 tokens");
  }
  if (dim_ < 1) {
    throw Error(ErrorKind::kValidation, "embedding dimension must be >= 1");
  }
  if (embeddings_.size() != tokens_.size() * dim_) {
    throw Error(ErrorKind::kValidation,
                fmt::format("embedding matrix has {} values, expected {} x {}",
                            embeddings_.size(), tokens_.size(), dim_));
  }
  index_.reserve(tokens_.size());
  for (std::size_t t = 0; t < tokens_.size(); ++t) {
    if (!index_.emplace(tokens_[t], t).second) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("duplicate token '{}' at index {}", tokens_[t], t));
    }
  }
  for (std::size_t k = 0; k < embeddings_.size(); ++k) {
    if (!std::isfinite(embeddings_[k])) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("non-finite value at token {} feature {}",
                              k / dim_, k % dim_));
    }
  }
}

const std::string& Vocabulary::token(std::size_t t) const {
  if (t >= tokens_.size()) {
    throw Error(ErrorKind::kIndex, fmt::format("token index {} out of range", t));
  }
  return tokens_[t];
}

std::span<const float> Vocabulary::row(std::size_t t) const {
  if (t >= tokens_.size()) {
    throw Error(ErrorKind::kIndex, fmt::format("token index {} out of range", t));
  }
  return std::span<const float>(embeddings_).subspan(t * dim_, dim_);
}

float Vocabulary::value(std::size_t t, std::size_t feature) const {
  if (t >= tokens_.size() || feature >= dim_) {
    throw Error(ErrorKind::kIndex,
                fmt::format("cell ({}, {}) out of range", t, feature));
  }
  return embeddings_[t * dim_ + feature];
}

std::vector<float> Vocabulary::column(std::size_t feature) const {
  if (feature >= dim_) {
    throw Error(ErrorKind::kIndex, fmt::format("feature {} out of range", feature));
  }
  std::vector<float> col(tokens_.size());
  for (std::size_t t = 0; t < tokens_.size(); ++t) {
    col[t] = embeddings_[t * dim_ + feature];
  }
  return col;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  if (auto t = find(token)) return *t;
  throw UnknownTokenError(std::string(token), 0);
}

Vocabulary Vocabulary::with_embeddings(std::vector<float> embeddings) const {
  return Vocabulary(tokens_, std::move(embeddings), dim_);
}

bool operator==(const Vocabulary& a, const Vocabulary& b) {
  if (a.dim_ != b.dim_ || a.tokens_ != b.tokens_) return false;
  // Bitwise comparison so -0.0 and 0.0 differ, matching the file format.
  return a.embeddings_.size() == b.embeddings_.size() &&
         std::equal(a.embeddings_.begin(), a.embeddings_.end(),
                    b.embeddings_.begin(), [](float x, float y) {
                      return std::bit_cast<std::uint32_t>(x) ==
                             std::bit_cast<std::uint32_t>(y);
                    });
}

std::vector<std::uint8_t> SerializeVocabulary(const Vocabulary& vocab) {
  ByteWriter w;
  w.magic("NVCB");
  w.u16(kVocabFormatVersion);
  w.u32(static_cast<std::uint32_t>(vocab.size()));
  w.u32(static_cast<std::uint32_t>(vocab.dim()));
  for (const auto& tok : vocab.tokens()) w.string(tok);
  for (float v : vocab.matrix()) w.f32(v);
  return std::move(w).take();
}

namespace {

Vocabulary ReadVocabularyBody(ByteReader& r) {
  r.expect_magic("NVCB");
  const std::uint16_t version = r.u16("version");
  if (version != kVocabFormatVersion) {
    throw Error(ErrorKind::kFormat,
                fmt::format("unsupported vocabulary version {}", version));
  }
  const std::uint32_t size = r.u32("|V|");
  const std::uint32_t dim = r.u32("m");
  // Each token costs at least 4 bytes and each value 4 bytes; reject headers
  // that cannot possibly fit before allocating.
  const std::uint64_t min_bytes =
      4ULL * size + 4ULL * static_cast<std::uint64_t>(size) * dim;
  if (min_bytes > r.remaining()) {
    throw Error(ErrorKind::kFormat,
                fmt::format("header declares |V|={} m={} but only {} byte(s) "
                            "follow", size, dim, r.remaining()));
  }
  std::vector<std::string> tokens;
  tokens.reserve(size);
  for (std::uint32_t t = 0; t < size; ++t) tokens.push_back(r.string("token"));
  std::vector<float> values(static_cast<std::size_t>(size) * dim);
  for (auto& v : values) v = r.f32("embedding value");
  return Vocabulary(std::move(tokens), std::move(values), dim);
}

}  // namespace

Vocabulary ParseVocabulary(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Vocabulary vocab = ReadVocabularyBody(r);
  if (r.remaining() != 0) {
    throw Error(ErrorKind::kFormat,
                fmt::format("{} trailing byte(s) after vocabulary body",
                            r.remaining()));
  }
  return vocab;
}

Vocabulary LoadVocabulary(const std::filesystem::path& path) {
  return ParseVocabulary(ReadFileBytes(path));
}

void SaveVocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeVocabulary(vocab));
}

Vocabulary SynthVocabulary(std::size_t size, std::size_t dim,
                           std::uint64_t seed, double scale) {
  if (size < 2) {
    throw Error(ErrorKind::kArgument,
                fmt::format("vocabulary size must be >= 2 (got {})", size));
  }
  if (dim < 1) throw Error(ErrorKind::kArgument, "dim must be >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::kArgument, "scale must be positive and finite");
  }
  const int width = size <= 10000 ? 4 : static_cast<int>(std::to_string(size - 1).size());
  std::vector<std::string> tokens;
  tokens.reserve(size);
  for (std::size_t t = 0; t < size; ++t) {
    tokens.push_back(fmt::format("tok{:0{}}", t, width));
  }
  SeqRng rng(seed);
  std::vector<float> values(size * dim);
  for (auto& v : values) {
    v = static_cast<float>(rng.uniform(-scale, scale));
    // Rounding to f32 may step just outside the closed range.
    v = std::clamp(v, static_cast<float>(-scale), static_cast<float>(scale));
  }
  return Vocabulary(std::move(tokens), std::move(values), dim);
}

}  // namespace splitvault
