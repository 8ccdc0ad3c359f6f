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
#include "splitvault/frequency_attack.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "splitvault/error.hpp"
#include "splitvault/metrics.hpp"
#include "splitvault/rng.hpp"

namespace splitvault {
namespace {

template <class Gram>
struct GramStats {
  std::size_t count = 0;
  std::size_t first_position = std::numeric_limits<std::size_t>::max();
  std::size_t first_seen = 0;
};

// Grams ranked by (count desc, first position asc, first seen asc).
template <class T>
std::vector<std::pair<std::vector<T>, GramStats<T>>> RankGrams(
    const std::vector<std::vector<T>>& sequences, std::size_t k) {
  std::map<std::vector<T>, GramStats<T>> stats;
  std::size_t seen = 0;
  for (const auto& s : sequences) {
    for (std::size_t j = 0; j + k <= s.size(); ++j) {
      std::vector<T> gram(s.begin() + j, s.begin() + j + k);
      auto [it, fresh] = stats.try_emplace(std::move(gram));
      if (fresh) it->second.first_seen = seen++;
      ++it->second.count;
      it->second.first_position = std::min(it->second.first_position, j);
    }
  }
  std::vector<std::pair<std::vector<T>, GramStats<T>>> ranked(stats.begin(), stats.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return std::tuple(-static_cast<long long>(a.second.count), a.second.first_position, a.second.first_seen) <
           std::tuple(-static_cast<long long>(b.second.count), b.second.first_position, b.second.first_seen);
  });
  return ranked;
}

}  // namespace

std::uint64_t Fingerprint(std::span<const float> v) {
  std::uint64_t h = Mix64(v.size());
  for (float x : v) h = Mix64(h ^ std::bit_cast<std::uint32_t>(x));
  return h;
}

FrequencyAttackResult FrequencyAttack(const std::vector<ObservedPrompt>& observations,
                                      const std::vector<std::vector<std::size_t>>& public_corpus,
                                      const FrequencyAttackOptions& options) {
  if (options.k == 0) throw Error(ErrorKind::kArgument, "gram length k must be >= 1");
  const std::size_t k = options.k;

  std::vector<std::vector<std::uint64_t>> prints;
  prints.reserve(observations.size());
  for (const auto& prompt : observations) {
    std::vector<std::uint64_t> p;
    p.reserve(prompt.size());
    for (const auto& v : prompt) p.push_back(Fingerprint(v));
    prints.push_back(std::move(p));
  }
  const auto observed = RankGrams(prints, k);
  const auto pub = RankGrams(public_corpus, k);

  FrequencyAttackResult result;
  std::map<std::vector<std::uint64_t>, std::size_t> matched;  // fingerprint gram -> match index
  for (std::size_t r = 0; r < std::min(observed.size(), pub.size()); ++r) {
    if (observed[r].second.count < options.min_support) break;  // ranks are count-sorted
    FrequencyMatch m;
    m.rank = r;
    m.fingerprints = observed[r].first;
    m.tokens = pub[r].first;
    m.support = observed[r].second.count;
    m.public_support = pub[r].second.count;
    matched.emplace(m.fingerprints, result.matches.size());
    result.matches.push_back(std::move(m));
  }

  result.recovered.resize(prints.size());
  for (std::size_t p = 0; p < prints.size(); ++p) {
    auto& rec = result.recovered[p];
    rec.assign(prints[p].size(), std::nullopt);
    for (std::size_t j = 0; j + k <= prints[p].size(); ++j) {
      const std::vector<std::uint64_t> gram(prints[p].begin() + j, prints[p].begin() + j + k);
      auto it = matched.find(gram);
      if (it == matched.end()) continue;
      const auto& tokens = result.matches[it->second].tokens;
      for (std::size_t q = 0; q < k; ++q) {
        if (!rec[j + q]) rec[j + q] = tokens[q];
      }
    }
  }
  return result;
}

FrequencyAttackScore ScoreFrequencyAttack(const FrequencyAttackResult& result,
                                          const std::vector<std::vector<std::size_t>>& truth,
                                          std::size_t template_len, const GameThresholds& th) {
  if (truth.size() != result.recovered.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} truth prompts but {} attacked prompts", truth.size(), result.recovered.size()));
  }
  constexpr std::size_t kUnknown = std::numeric_limits<std::size_t>::max();
  FrequencyAttackScore s;
  std::size_t wins = 0, scored = 0;
  for (std::size_t p = 0; p < truth.size(); ++p) {
    const auto& x = truth[p];
    const auto& rec = result.recovered[p];
    if (rec.size() != x.size()) {
      throw Error(ErrorKind::kLengthMismatch, fmt::format("prompt {} length differs from observation", p));
    }
    std::vector<std::size_t> body_truth, body_recon;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const bool body = j >= template_len;
      if (rec[j]) {
        const bool ok = *rec[j] == x[j];
        (body ? (ok ? s.body_correct : s.body_wrong) : (ok ? s.template_correct : s.template_wrong))++;
      }
      if (body) {
        body_truth.push_back(x[j]);
        body_recon.push_back(rec[j].value_or(kUnknown));
      }
    }
    if (body_truth.empty()) continue;
    ++scored;
    if (Bleu(body_recon, body_truth, 1) >= th.rho_b || RougeF1(body_recon, body_truth, 1) >= th.rho_r) ++wins;
  }
  s.post_exclusion_asr = scored ? static_cast<double>(wins) / static_cast<double>(scored) : 0.0;
  return s;
}

}  // namespace splitvault
