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
#include "splitvault/ltokenizer.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "splitvault/binary_io.hpp"
#include "splitvault/error.hpp"
#include "splitvault/rng.hpp"

namespace splitvault {
namespace {

void FillInverse(TokenPermutation& p) {
  p.inverse.assign(p.size, 0);
  for (std::size_t t = 0; t < p.size; ++t) p.inverse[p.forward[t]] = t;
}

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

TokenPermutation GeneratePermutation(std::size_t size, std::uint64_t seed) {
  if (size == 0) throw Error(ErrorKind::kArgument, "permutation size must be >= 1");
  TokenPermutation p;
  p.size = size;
  p.seed = seed;
  p.forward.resize(size);
  std::iota(p.forward.begin(), p.forward.end(), std::size_t{0});
  SeqRng rng(seed);
  for (std::size_t i = size - 1; i > 0; --i) {
    std::swap(p.forward[i], p.forward[rng.below(i + 1)]);
  }
  FillInverse(p);
  return p;
}

TokenPermutation IdentityPermutation(std::size_t size) {
  TokenPermutation p;
  p.size = size;
  p.forward.resize(size);
  std::iota(p.forward.begin(), p.forward.end(), std::size_t{0});
  FillInverse(p);
  return p;
}

std::vector<std::uint8_t> SerializePermutation(const TokenPermutation& perm) {
  ByteWriter w;
  w.magic("NPRM");
  w.u16(kPermutationFormatVersion);
  w.u32(static_cast<std::uint32_t>(perm.size));
  w.u64(perm.seed);
  return std::move(w).take();
}

TokenPermutation ParsePermutation(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("NPRM");
  const auto version = r.u16("version");
  if (version != kPermutationFormatVersion) {
    throw Error(ErrorKind::kFormat, fmt::format("unsupported permutation version {}", version));
  }
  const auto size = r.u32("size");
  const auto seed = r.u64("seed");
  if (r.remaining() != 0) throw Error(ErrorKind::kFormat, "trailing bytes after permutation");
  if (size == 0) throw Error(ErrorKind::kFormat, "permutation size is 0");
  return GeneratePermutation(size, seed);
}

TokenPermutation LoadPermutation(const std::filesystem::path& path) {
  return ParsePermutation(ReadFileBytes(path));
}

void SavePermutation(const TokenPermutation& perm, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializePermutation(perm));
}

std::vector<std::string> Segment(std::string_view text, const Vocabulary& vocab) {
  std::size_t longest = 0;
  for (const auto& t : vocab.tokens()) longest = std::max(longest, t.size());
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = std::min(longest, text.size() - i);
    for (; len > 0; --len) {
      if (vocab.find(text.substr(i, len))) break;
    }
    if (len > 0) {
      out.emplace_back(text.substr(i, len));
      i += len;
    } else if (IsSpace(text[i])) {
      ++i;
    } else {
      throw UnsegmentableError(i);
    }
  }
  return out;
}

std::vector<std::size_t> EncodeIndices(std::span<const std::size_t> original,
                                       const TokenPermutation& perm) {
  std::vector<std::size_t> out;
  out.reserve(original.size());
  for (auto t : original) {
    if (t >= perm.size) throw Error(ErrorKind::kIndex, fmt::format("token index {} out of range", t));
    out.push_back(perm.forward[t]);
  }
  return out;
}

std::vector<std::size_t> DecodeIndices(std::span<const std::size_t> local,
                                       const TokenPermutation& perm) {
  std::vector<std::size_t> out;
  out.reserve(local.size());
  for (auto g : local) {
    if (g >= perm.size) throw Error(ErrorKind::kIndex, fmt::format("local index {} out of range", g));
    out.push_back(perm.inverse[g]);
  }
  return out;
}

std::vector<std::size_t> Encode(std::span<const std::string> tokens,
                                const TokenPermutation& perm, const Vocabulary& vocab) {
  if (perm.size != vocab.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                fmt::format("permutation size {} != vocabulary size {}", perm.size, vocab.size()));
  }
  std::vector<std::size_t> original;
  original.reserve(tokens.size());
  for (const auto& s : tokens) original.push_back(vocab.index_of(s));
  return EncodeIndices(original, perm);
}

std::vector<std::string> Decode(std::span<const std::size_t> local,
                                const TokenPermutation& perm, const Vocabulary& vocab) {
  if (perm.size != vocab.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                fmt::format("permutation size {} != vocabulary size {}", perm.size, vocab.size()));
  }
  std::vector<std::string> out;
  for (auto t : DecodeIndices(local, perm)) out.push_back(vocab.token(t));
  return out;
}

}  // namespace splitvault
