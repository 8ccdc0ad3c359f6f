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
#ifndef SPLITVAULT_TESTS_HELPERS_HPP_
#define SPLITVAULT_TESTS_HELPERS_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <unistd.h>
#include <filesystem>
#include <string>
#include <vector>

#include "splitvault/error.hpp"
#include "splitvault/rng.hpp"
#include "splitvault/vocab.hpp"

namespace svt {

// Vocabulary with tokens "a", "b", ... (or t0, t1, ... past 26).
inline splitvault::Vocabulary Vocab(std::vector<float> values, std::size_t dim) {
  std::vector<std::string> toks;
  const std::size_t n = values.size() / dim;
  for (std::size_t t = 0; t < n; ++t) toks.push_back(n <= 26 ? std::string(1, static_cast<char>('a' + t)) : "t" + std::to_string(t));
  return splitvault::Vocabulary(std::move(toks), std::move(values), dim);
}

// The 6x3 fixture every suite shares.
inline splitvault::Vocabulary Fixture() { return splitvault::SynthVocabulary(6, 3, 7, 0.5); }

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("splitvault_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

template <class F>
splitvault::ErrorKind KindOf(F&& f) {
  try {
    f();
  } catch (const splitvault::Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected a splitvault::Error");
}

inline bool BitsEqual(float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace svt

#endif  // SPLITVAULT_TESTS_HELPERS_HPP_
