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
#include "splitvault/indvocab.hpp"

#include <algorithm>
#include <bit>
#include <thread>
#include <unordered_set>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "splitvault/binary_io.hpp"
#include "splitvault/error.hpp"

namespace splitvault {

Digest VocabularyDigest(const Vocabulary& vocab) {
  const auto bytes = SerializeVocabulary(vocab);
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != out.size()) {
    throw Error(ErrorKind::kIo, "SHA-256 computation failed");
  }
  return out;
}

std::string DigestHex(const Digest& digest) {
  std::string s;
  s.reserve(64);
  for (auto b : digest) s += fmt::format("{:02x}", b);
  return s;
}

IndVocabBuilder::IndVocabBuilder(const Vocabulary& vocab, const BudgetPlan& plan,
                                 DenominatorPolicy policy)
    : vocab_(vocab), plan_(plan), policy_(policy), digest_(VocabularyDigest(vocab)) {
  plan.Validate(vocab.dim());
  const std::size_t n = vocab.size();
  const std::size_t m = vocab.dim();
  models_.reserve(m);
  std::vector<InfeasibleCell> bad;
  for (std::size_t i = 0; i < m; ++i) {
    const auto col = vocab.column(i);
    models_.emplace_back(col, m, plan.per_feature[i], policy);
    for (std::size_t t = 0; t < n; ++t) {
      if (!models_[i].feasible(t)) {
        bad.push_back({t, i, plan.per_feature[i], models_[i].min_feasible_epsilon(t)});
      }
    }
  }
  if (!bad.empty()) throw InfeasibleBudgetError(std::move(bad), MinimalUniformTotalEpsilon(vocab));
}

std::vector<float> IndVocabBuilder::randomize_row(std::size_t token, std::uint64_t seed) const {
  if (token >= vocab_.size()) {
    throw Error(ErrorKind::kIndex, fmt::format("token index {} out of range", token));
  }
  std::vector<float> row(vocab_.dim());
  for (std::size_t i = 0; i < row.size(); ++i) row[i] = models_[i].sample(token, CellRng(seed, token, i));
  return row;
}

IndVocab IndVocabBuilder::build(std::uint64_t seed, BuildOptions options) const {
  const std::size_t n = vocab_.size();
  const std::size_t m = vocab_.dim();
  std::vector<float> out(n * m);
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(m)));
  // Cells are keyed by (seed, token, feature), so the partition is irrelevant
  // to the result.
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t t = 0; t < n; ++t) {
        out[t * m + i] = models_[i].sample(t, CellRng(seed, t, i));
      }
    }
  };
  if (threads == 1) {
    work(0, m);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (m + threads - 1) / threads;
    for (std::size_t b = 0; b < m; b += chunk) pool.emplace_back(work, b, std::min(m, b + chunk));
  }
  return IndVocab{vocab_.with_embeddings(std::move(out)), plan_, seed, policy_, digest_};
}

IndVocab BuildIndVocab(const Vocabulary& vocab, const BudgetPlan& plan, std::uint64_t seed,
                       DenominatorPolicy policy, BuildOptions options) {
  return IndVocabBuilder(vocab, plan, policy).build(seed, options);
}

std::vector<std::uint8_t> SerializeIndVocab(const IndVocab& ind) {
  ByteWriter w;
  w.magic("NIND");
  w.u16(kIndVocabFormatVersion);
  w.bytes(ind.source_digest);
  w.f64(ind.plan.total_epsilon);
  w.u32(static_cast<std::uint32_t>(ind.randomized.dim()));
  w.u32(static_cast<std::uint32_t>(ind.randomized.size()));
  w.u8(static_cast<std::uint8_t>(ind.policy));
  w.u64(ind.seed);
  for (double e : ind.plan.per_feature) w.f64(e);
  w.bytes(SerializeVocabulary(ind.randomized));
  return std::move(w).take();
}

IndVocab ParseIndVocab(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("NIND");
  const auto version = r.u16("version");
  if (version != kIndVocabFormatVersion) {
    throw Error(ErrorKind::kFormat,
                fmt::format("unsupported IndVocab version {}", version));
  }
  Digest source_digest{};
  const auto digest = r.bytes(32, "source_digest");
  std::copy(digest.begin(), digest.end(), source_digest.begin());
  BudgetPlan plan;
  plan.total_epsilon = r.f64("epsilon");
  const std::uint32_t m = r.u32("m");
  const std::uint32_t n = r.u32("|V|");
  const std::uint8_t policy = r.u8("policy");
  if (policy > 1) throw Error(ErrorKind::kFormat, fmt::format("unknown policy code {}", policy));
  const std::uint64_t seed = r.u64("seed");
  if (r.remaining() / 8 < m) {
    throw Error(ErrorKind::kFormat, "IndVocab header declares more budgets than present");
  }
  plan.per_feature.resize(m);
  for (auto& e : plan.per_feature) e = r.f64("eps_i");
  Vocabulary randomized = ParseVocabulary(r.bytes(r.remaining(), "matrix"));
  if (randomized.dim() != m || randomized.size() != n) {
    throw Error(ErrorKind::kFormat,
                fmt::format("IndVocab header says {}x{} but matrix is {}x{}", n, m,
                            randomized.size(), randomized.dim()));
  }
  try {
    plan.Validate(m);
  } catch (const Error& e) {
    throw Error(ErrorKind::kFormat, std::string("IndVocab budget: ") + e.what());
  }
  return IndVocab{std::move(randomized), std::move(plan), seed,
                  static_cast<DenominatorPolicy>(policy), source_digest};
}

IndVocab LoadIndVocab(const std::filesystem::path& path) {
  return ParseIndVocab(ReadFileBytes(path));
}

void SaveIndVocab(const IndVocab& ind, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeIndVocab(ind));
}

IndVocabAudit AuditIndVocab(const IndVocab& ind, const Vocabulary& source) {
  IndVocabAudit a;
  a.digest_ok = VocabularyDigest(source) == ind.source_digest;
  a.tokens_ok = source.tokens() == ind.randomized.tokens() &&
                source.dim() == ind.randomized.dim();
  if (!a.tokens_ok) return a;

  const std::size_t n = source.size();
  const std::size_t m = source.dim();
  for (std::size_t i = 0; i < m; ++i) {
    std::unordered_set<std::uint32_t> col;
    for (std::size_t t = 0; t < n; ++t) col.insert(std::bit_cast<std::uint32_t>(source.value(t, i)));
    for (std::size_t t = 0; t < n; ++t) {
      if (!col.count(std::bit_cast<std::uint32_t>(ind.randomized.value(t, i)))) ++a.foreign_cells;
    }
  }
  a.support_ok = a.foreign_cells == 0;

  try {
    a.rebuild_ok = BuildIndVocab(source, ind.plan, ind.seed, ind.policy).randomized ==
                   ind.randomized;
  } catch (const Error&) {
    a.rebuild_ok = false;
  }

  if (n <= kExactAuditMaxVocab) {
    a.effective = MeasureEffectiveEpsilon(source, ind.plan, ind.policy);
    a.ind_ok = true;
    for (std::size_t i = 0; i < m; ++i) {
      const bool ok = a.effective.per_feature[i] <= ind.plan.per_feature[i] + kIndAuditTolerance;
      a.within_budget.push_back(ok);
      a.ind_ok = a.ind_ok && ok;
    }
  }
  return a;
}

}  // namespace splitvault
