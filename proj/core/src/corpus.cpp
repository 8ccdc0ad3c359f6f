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
#include "splitvault/corpus.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "splitvault/binary_io.hpp"
#include "splitvault/error.hpp"

namespace splitvault {
namespace {

std::vector<std::string> Split(const std::string& s, char sep, bool skip_empty) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(sep, start);
    if (end == std::string::npos) end = s.size();
    if (!(skip_empty && end == start)) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::vector<std::size_t> ResolveTokens(const std::string& field,
                                       const Vocabulary& vocab,
                                       std::size_t line) {
  std::vector<std::size_t> out;
  for (const auto& tok : Split(field, ' ', /*skip_empty=*/true)) {
    auto idx = vocab.find(tok);
    if (!idx) throw UnknownTokenError(tok, line);
    out.push_back(*idx);
  }
  return out;
}

std::string JoinTokens(const std::vector<std::size_t>& seq, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    if (j) out.push_back(' ');
    out += vocab.token(seq[j]);
  }
  return out;
}

}  // namespace

std::vector<CorpusRecord> ParseCorpus(const std::string& text,
                                      const Vocabulary& vocab) {
  std::vector<CorpusRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = Split(line, '\t', /*skip_empty=*/false);
    if (fields.size() < 3 || fields.size() > 4) {
      throw Error(ErrorKind::kFormat,
                  fmt::format("line {}: expected 3 or 4 TAB-separated fields, "
                              "got {}", lineno, fields.size()));
    }
    CorpusRecord rec;
    rec.prompt = ResolveTokens(fields[0], vocab, lineno);
    if (rec.prompt.empty()) {
      throw Error(ErrorKind::kFormat, fmt::format("line {}: empty prompt", lineno));
    }
    rec.code = ResolveTokens(fields[1], vocab, lineno);
    rec.tests = Split(fields[2], ';', /*skip_empty=*/true);
    if (fields.size() == 4 && !fields[3].empty()) {
      std::vector<bool> bits;
      for (char c : fields[3]) {
        if (c != '0' && c != '1') {
          throw Error(ErrorKind::kFormat,
                      fmt::format("line {}: pass bitmap must be 0/1", lineno));
        }
        bits.push_back(c == '1');
      }
      if (bits.size() != rec.tests.size()) {
        throw Error(ErrorKind::kFormat,
                    fmt::format("line {}: pass bitmap has {} entries for {} "
                                "test(s)", lineno, bits.size(), rec.tests.size()));
      }
      rec.pass_truth = std::move(bits);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string FormatCorpus(const std::vector<CorpusRecord>& records,
                         const Vocabulary& vocab) {
  std::string out;
  for (const auto& rec : records) {
    out += JoinTokens(rec.prompt, vocab);
    out += '\t';
    out += JoinTokens(rec.code, vocab);
    out += '\t';
    for (std::size_t k = 0; k < rec.tests.size(); ++k) {
      if (k) out += ';';
      out += rec.tests[k];
    }
    if (rec.pass_truth) {
      out += '\t';
      for (bool b : *rec.pass_truth) out += b ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

std::vector<CorpusRecord> LoadCorpus(const std::filesystem::path& path,
                                     const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseCorpus(ss.str(), vocab);
}

void SaveCorpus(const std::vector<CorpusRecord>& records,
                const Vocabulary& vocab, const std::filesystem::path& path) {
  const std::string text = FormatCorpus(records, vocab);
  WriteFileBytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                 text.size()));
}

std::vector<std::vector<std::size_t>> Prompts(
    const std::vector<CorpusRecord>& records) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.prompt);
  return out;
}

}  // namespace splitvault
