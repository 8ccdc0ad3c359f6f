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
#ifndef SPLITVAULT_METRICS_HPP_
#define SPLITVAULT_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splitvault/error.hpp"

namespace splitvault {

namespace metrics_detail {

template <class T>
std::map<std::vector<T>, std::size_t> NGramCounts(std::span<const T> s, std::size_t n) {
  std::map<std::vector<T>, std::size_t> counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++counts[std::vector<T>(s.begin() + i, s.begin() + i + n)];
  }
  return counts;
}

template <class T>
std::size_t ClippedOverlap(const std::map<std::vector<T>, std::size_t>& a,
                           const std::map<std::vector<T>, std::size_t>& b) {
  std::size_t hit = 0;
  for (const auto& [gram, c] : a) {
    auto it = b.find(gram);
    if (it != b.end()) hit += std::min(c, it->second);
  }
  return hit;
}

inline void RequireNonEmpty(std::size_t cand, std::size_t ref, const char* what) {
  if (cand == 0 || ref == 0) {
    throw Error(ErrorKind::kEmptySequence, std::string(what) + " needs non-empty sequences");
  }
}

inline void RequireOrder(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kArgument, "n-gram order must be >= 1");
}

}  // namespace metrics_detail

// Modified n-gram precision for orders 1..n, geometric mean, brevity penalty
// exp(1 - |ref| / |cand|) when the candidate is shorter; scaled to [0, 100].
// No smoothing: any zero precision gives 0.
template <class T>
double Bleu(std::span<const T> cand, std::span<const T> ref, std::size_t n = 1) {
  using namespace metrics_detail;
  RequireOrder(n);
  RequireNonEmpty(cand.size(), ref.size(), "bleu");
  double log_sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (cand.size() < k) return 0.0;
    const auto c = NGramCounts(cand, k);
    const auto r = NGramCounts(ref, k);
    const std::size_t hit = ClippedOverlap(c, r);
    if (hit == 0) return 0.0;
    log_sum += std::log(static_cast<double>(hit) / static_cast<double>(cand.size() - k + 1));
  }
  const double bp = cand.size() < ref.size()
                        ? std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()))
                        : 1.0;
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(n));
}

// F1 of n-gram multiset precision and recall, in [0, 1].
template <class T>
double RougeF1(std::span<const T> cand, std::span<const T> ref, std::size_t n = 1) {
  using namespace metrics_detail;
  RequireOrder(n);
  RequireNonEmpty(cand.size(), ref.size(), "rouge");
  if (cand.size() < n || ref.size() < n) return 0.0;
  const std::size_t hit = ClippedOverlap(NGramCounts(cand, n), NGramCounts(ref, n));
  if (hit == 0) return 0.0;
  const double p = static_cast<double>(hit) / static_cast<double>(cand.size() - n + 1);
  const double r = static_cast<double>(hit) / static_cast<double>(ref.size() - n + 1);
  return 2.0 * p * r / (p + r);
}

// |truth ∩ recon| / |truth| with multiset intersection.
template <class T>
double Crt(std::span<const T> truth, std::span<const T> recon) {
  using namespace metrics_detail;
  if (truth.empty()) throw Error(ErrorKind::kEmptySequence, "crt needs a non-empty truth");
  const std::size_t hit = ClippedOverlap(NGramCounts(truth, 1), NGramCounts(recon, 1));
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

// Convenience overloads for vectors.
template <class T>
double Bleu(const std::vector<T>& c, const std::vector<T>& r, std::size_t n = 1) {
  return Bleu(std::span<const T>(c), std::span<const T>(r), n);
}
template <class T>
double RougeF1(const std::vector<T>& c, const std::vector<T>& r, std::size_t n = 1) {
  return RougeF1(std::span<const T>(c), std::span<const T>(r), n);
}
template <class T>
double Crt(const std::vector<T>& t, const std::vector<T>& r) {
  return Crt(std::span<const T>(t), std::span<const T>(r));
}

// Identifier tokens of Python-like code: maximal [A-Za-z0-9_] runs not
// starting with a digit.
std::vector<std::string> IdentifierTokens(std::string_view code);

// Import targets, def names and assignment targets found by a line scanner.
std::set<std::string> SensitiveIdentifiers(std::string_view truth_code);

// 1 iff some sensitive identifier of the truth occurs as a whole identifier
// token in the reconstruction.
int Leak(std::string_view truth_code, std::string_view recon_code);

// sum(both pass) / sum(truth passes); nullopt when the truth passes nothing.
std::optional<double> Fusi(const std::vector<bool>& truth_row, const std::vector<bool>& recon_row);

// 1 - C(n-c, r) / C(n, r), exact rational arithmetic, rounded once to double.
double PassAtR(std::uint64_t n, std::uint64_t c, std::uint64_t r);

const std::set<std::string>& PythonKeywords();

// 0.5 * Bleu(n <= 2) + 0.5 * unigram Bleu with keywords weighted 5x.
// Stands in for CodeBleu without AST or dataflow matching.
double SimplifiedCodeBleu(std::span<const std::string> cand, std::span<const std::string> ref,
                          const std::set<std::string>& keywords = PythonKeywords());

// Candidates x tests pass/fail table. Text form: one row per line, '0'/'1' per test.
using PassMatrix = std::vector<std::vector<bool>>;
PassMatrix ParsePassMatrix(std::string_view text);
std::string FormatPassMatrix(const PassMatrix& matrix);

}  // namespace splitvault

#endif  // SPLITVAULT_METRICS_HPP_
