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
#include "splitvault/metrics.hpp"

#include <cctype>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

namespace splitvault {
namespace {

bool IsIdentStart(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool IsIdentChar(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool StartsWithWord(std::string_view s, std::string_view word) {
  return s.size() > word.size() && s.substr(0, word.size()) == word &&
         std::isspace(static_cast<unsigned char>(s[word.size()]));
}

// Assignment targets on the left of a single '=' (not ==, <=, >=, !=).
void AssignmentTargets(std::string_view line, std::set<std::string>& out) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] != '=') continue;
    const char prev = i > 0 ? line[i - 1] : ' ';
    const char next = i + 1 < line.size() ? line[i + 1] : ' ';
    if (next == '=' || prev == '=' || prev == '<' || prev == '>' || prev == '!') {
      if (next == '=') ++i;
      continue;
    }
    std::string_view lhs = line.substr(0, i);
    if (!lhs.empty() && std::string_view("+-*/%&|^@").find(lhs.back()) != std::string_view::npos) {
      lhs.remove_suffix(1);
    }
    // Only plain names and tuples of names; skip attribute/subscript targets.
    bool plain = true;
    for (char c : lhs) {
      if (!(IsIdentChar(c) || c == ',' || c == ' ' || c == '\t' || c == '(' || c == ')')) plain = false;
    }
    if (!plain) return;
    for (const auto& id : IdentifierTokens(lhs)) out.insert(id);
    return;
  }
}

}  // namespace

std::vector<std::string> IdentifierTokens(std::string_view code) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < code.size()) {
    if (IsIdentChar(code[i])) {
      std::size_t j = i;
      while (j < code.size() && IsIdentChar(code[j])) ++j;
      if (IsIdentStart(code[i])) out.emplace_back(code.substr(i, j - i));
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

std::set<std::string> SensitiveIdentifiers(std::string_view truth) {
  std::set<std::string> ids;
  const auto& kw = PythonKeywords();
  std::size_t start = 0;
  while (start <= truth.size()) {
    std::size_t end = truth.find('\n', start);
    if (end == std::string_view::npos) end = truth.size();
    const std::string_view line = Trim(truth.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    if (StartsWithWord(line, "import") || StartsWithWord(line, "from")) {
      for (const auto& id : IdentifierTokens(line)) {
        if (!kw.count(id)) ids.insert(id);
      }
    } else if (StartsWithWord(line, "def")) {
      const auto rest = Trim(line.substr(3));
      std::size_t j = 0;
      while (j < rest.size() && IsIdentChar(rest[j])) ++j;
      if (j > 0 && j < rest.size() && rest[j] == '(' && IsIdentStart(rest[0])) {
        ids.emplace(rest.substr(0, j));
      }
    } else {
      std::set<std::string> targets;
      AssignmentTargets(line, targets);
      for (const auto& id : targets) {
        if (!kw.count(id)) ids.insert(id);
      }
    }
    if (end == truth.size()) break;
  }
  return ids;
}

int Leak(std::string_view truth_code, std::string_view recon_code) {
  const auto ids = SensitiveIdentifiers(truth_code);
  if (ids.empty()) return 0;
  for (const auto& tok : IdentifierTokens(recon_code)) {
    if (ids.count(tok)) return 1;
  }
  return 0;
}

std::optional<double> Fusi(const std::vector<bool>& truth, const std::vector<bool>& recon) {
  if (truth.size() != recon.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("fusi rows differ in length ({} vs {})", truth.size(), recon.size()));
  }
  std::size_t denom = 0, num = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) {
      ++denom;
      if (recon[i]) ++num;
    }
  }
  if (denom == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(denom);
}

double PassAtR(std::uint64_t n, std::uint64_t c, std::uint64_t r) {
  if (c > n || r < 1 || r > n) {
    throw Error(ErrorKind::kArgument,
                fmt::format("pass@r needs 0 <= c <= n and 1 <= r <= n (n={}, c={}, r={})", n, c, r));
  }
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  auto choose = [](std::uint64_t a, std::uint64_t b) -> cpp_int {
    if (b > a) return 0;
    cpp_int v = 1;
    for (std::uint64_t i = 0; i < b; ++i) {
      v *= a - i;
      v /= i + 1;
    }
    return v;
  };
  const cpp_rational miss(choose(n - c, r), choose(n, r));
  return static_cast<double>(cpp_rational(1) - miss);
}

const std::set<std::string>& PythonKeywords() {
  static const std::set<std::string> kw = {
      "False", "None",   "True",    "and",      "as",       "assert", "async",
      "await", "break",  "class",   "continue", "def",      "del",    "elif",
      "else",  "except", "finally", "for",      "from",     "global", "if",
      "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
      "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};
  return kw;
}

double SimplifiedCodeBleu(std::span<const std::string> cand, std::span<const std::string> ref,
                          const std::set<std::string>& keywords) {
  using namespace metrics_detail;
  RequireNonEmpty(cand.size(), ref.size(), "codebleu");
  const double ngram = Bleu(cand, ref, std::min<std::size_t>(2, std::max<std::size_t>(1, cand.size())));
  const auto c = NGramCounts(cand, 1);
  const auto r = NGramCounts(ref, 1);
  double hit = 0.0, total = 0.0;
  for (const auto& [gram, count] : c) {
    const double w = keywords.count(gram[0]) ? 5.0 : 1.0;
    total += w * static_cast<double>(count);
    auto it = r.find(gram);
    if (it != r.end()) hit += w * static_cast<double>(std::min(count, it->second));
  }
  const double bp = cand.size() < ref.size()
                        ? std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()))
                        : 1.0;
  const double weighted = 100.0 * bp * hit / total;
  return 0.5 * ngram + 0.5 * weighted;
}

PassMatrix ParsePassMatrix(std::string_view text) {
  PassMatrix m;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = Trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    std::vector<bool> row;
    for (char ch : line) {
      if (ch != '0' && ch != '1') {
        throw Error(ErrorKind::kFormat, fmt::format("pass matrix line {}: unexpected '{}'", line_no, ch));
      }
      row.push_back(ch == '1');
    }
    if (!m.empty() && row.size() != m.front().size()) {
      throw Error(ErrorKind::kFormat, fmt::format("pass matrix line {} has {} tests, expected {}",
                                                  line_no, row.size(), m.front().size()));
    }
    m.push_back(std::move(row));
  }
  return m;
}

std::string FormatPassMatrix(const PassMatrix& matrix) {
  std::string out;
  for (const auto& row : matrix) {
    for (bool b : row) out += b ? '1' : '0';
    out += '\n';
  }
  return out;
}

}  // namespace splitvault
