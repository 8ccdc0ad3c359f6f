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
#include <doctest.h>

#include <array>

#include "helpers.hpp"
#include "splitvault/binary_io.hpp"
#include "splitvault/ltokenizer.hpp"

using namespace splitvault;
using svt::KindOf;

TEST_SUITE("ltokenizer") {
  TEST_CASE("size one and determinism") {
    CHECK(GeneratePermutation(1, 99).forward == std::vector<std::size_t>{0});
    CHECK(GeneratePermutation(50, 3) == GeneratePermutation(50, 3));
    CHECK_FALSE(GeneratePermutation(50, 3).forward == GeneratePermutation(50, 4).forward);
    CHECK(KindOf([] { GeneratePermutation(0, 1); }) == ErrorKind::kArgument);
  }

  TEST_CASE("bijection for many seeds and sizes") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      for (std::size_t n : {2u, 3u, 17u, 256u}) {
        const auto p = GeneratePermutation(n, seed);
        std::vector<int> seen(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
          ++seen[p.forward[i]];
          CHECK(p.inverse[p.forward[i]] == i);
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
      }
    }
  }

  TEST_CASE("each token lands at each index with frequency 1/4") {
    constexpr int kSeeds = 100'000;
    std::array<std::array<int, 4>, 4> hits{};
    for (int s = 0; s < kSeeds; ++s) {
      const auto p = GeneratePermutation(4, static_cast<std::uint64_t>(s) * 7919 + 1);
      for (std::size_t t = 0; t < 4; ++t) ++hits[t][p.forward[t]];
    }
    const double sigma = std::sqrt(0.25 * 0.75 / kSeeds);
    for (const auto& row : hits) {
      for (int h : row) CHECK(std::abs(double(h) / kSeeds - 0.25) <= 3 * sigma);
    }
  }

  TEST_CASE("segmentation") {
    const Vocabulary abab(std::vector<std::string>{"ab", "a", "b"}, std::vector<float>{0, 1, 2}, 1);
    CHECK(Segment("ab", abab) == std::vector<std::string>{"ab"});
    CHECK(Segment("aab", abab) == std::vector<std::string>{"a", "ab"});
    const Vocabulary ab(std::vector<std::string>{"a", "b"}, std::vector<float>{0, 1}, 1);
    CHECK(Segment("ab", ab) == std::vector<std::string>{"a", "b"});
    CHECK(Segment("", ab).empty());
    const Vocabulary a(std::vector<std::string>{"a", "c"}, std::vector<float>{0, 1}, 1);
    try {
      Segment("ax", a);
      FAIL("expected UnsegmentableError");
    } catch (const UnsegmentableError& e) {
      CHECK(e.byte_offset() == 1);
    }
  }

  TEST_CASE("encode and decode") {
    const Vocabulary v = svt::Fixture();
    const auto id = IdentityPermutation(6);
    const std::vector<std::string> s{"tok0002", "tok0005", "tok0002"};
    CHECK(Encode(s, id, v) == std::vector<std::size_t>{2, 5, 2});
    SeqRng rng(4);
    for (int k = 0; k < 1000; ++k) {
      const auto p = GeneratePermutation(6, rng.bits());
      std::vector<std::string> toks(1 + rng.below(20));
      for (auto& t : toks) t = v.token(rng.below(6));
      CHECK(Decode(Encode(toks, p, v), p, v) == toks);
    }
    const std::vector<std::string> unknown{"tok0001", "zzz"};
    CHECK_THROWS_AS(Encode(unknown, id, v), UnknownTokenError);
    const std::vector<std::size_t> bad{6};
    CHECK(KindOf([&] { Decode(bad, id, v); }) == ErrorKind::kIndex);
    CHECK(KindOf([&] { DecodeIndices(bad, id); }) == ErrorKind::kIndex);
    CHECK(KindOf([&] { EncodeIndices(bad, id); }) == ErrorKind::kIndex);
  }

  TEST_CASE("a cloud decoding local indices with the public tokenizer reads other tokens") {
    const Vocabulary v = svt::Fixture();
    const auto p = GeneratePermutation(6, 17);
    const auto id = IdentityPermutation(6);
    for (std::size_t t = 0; t < 6; ++t) {
      const std::vector<std::string> one{v.token(t)};
      const auto local = Encode(one, p, v);
      const auto seen = Decode(local, id, v);
      if (p.forward[t] != t) {
        CHECK(seen[0] != v.token(t));
      } else {
        CHECK(seen[0] == v.token(t));
      }
    }
  }

  TEST_CASE("permutation file") {
    svt::TempDir dir;
    const auto p = GeneratePermutation(1000, 5);
    SavePermutation(p, dir / "p.nprm");
    CHECK(LoadPermutation(dir / "p.nprm") == p);
    auto bytes = SerializePermutation(p);
    CHECK(bytes.size() == 4 + 2 + 4 + 8);  // the array itself is never stored
    bytes.push_back(0);
    CHECK(KindOf([&] { ParsePermutation(bytes); }) == ErrorKind::kFormat);
    bytes = SerializePermutation(p);
    bytes[1] = 'Q';
    CHECK(KindOf([&] { ParsePermutation(bytes); }) == ErrorKind::kFormat);
  }
}
