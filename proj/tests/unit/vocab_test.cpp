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

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "splitvault/binary_io.hpp"
#include "splitvault/corpus.hpp"
#include "splitvault/vocab.hpp"

using namespace splitvault;
using svt::KindOf;

TEST_SUITE("vocab-store") {
  TEST_CASE("minimal two-token file parses") {
    ByteWriter w;
    w.magic("NVCB");
    w.u16(1);
    w.u32(2);
    w.u32(1);
    w.string("x");
    w.string("y");
    w.f32(0.0f);
    w.f32(1.0f);
    const Vocabulary v = ParseVocabulary(w.data());
    CHECK(v.size() == 2);
    CHECK(v.dim() == 1);
    CHECK(v.value(1, 0) == 1.0f);
    CHECK(v.index_of("y") == 1);
  }

  TEST_CASE("header claiming more rows than present is a format error") {
    ByteWriter w;
    w.magic("NVCB");
    w.u16(1);
    w.u32(3);
    w.u32(1);
    w.string("x");
    w.string("y");
    w.f32(0.0f);
    w.f32(1.0f);
    CHECK(KindOf([&] { ParseVocabulary(w.data()); }) == ErrorKind::kFormat);
  }

  TEST_CASE("bad magic, version and trailing bytes") {
    auto bytes = SerializeVocabulary(svt::Fixture());
    auto bad = bytes;
    bad[0] = 'X';
    CHECK(KindOf([&] { ParseVocabulary(bad); }) == ErrorKind::kFormat);
    bad = bytes;
    bad[4] = 9;
    CHECK(KindOf([&] { ParseVocabulary(bad); }) == ErrorKind::kFormat);
    bad = bytes;
    bad.push_back(0);
    CHECK(KindOf([&] { ParseVocabulary(bad); }) == ErrorKind::kFormat);
  }

  TEST_CASE("save and load round-trip bitwise") {
    svt::TempDir dir;
    const Vocabulary v = SynthVocabulary(6, 3, 42, 1.0);
    SaveVocabulary(v, dir / "v.nvcb");
    const Vocabulary back = LoadVocabulary(dir / "v.nvcb");
    REQUIRE(back.size() == 6);
    REQUIRE(back.dim() == 3);
    int same = 0;
    for (std::size_t k = 0; k < 18; ++k) same += svt::BitsEqual(v.matrix()[k], back.matrix()[k]);
    CHECK(same == 18);
    CHECK(back == v);
    SaveVocabulary(back, dir / "w.nvcb");
    CHECK(ReadFileBytes(dir / "v.nvcb") == ReadFileBytes(dir / "w.nvcb"));
  }

  TEST_CASE("saving into a missing directory is an io error") {
    CHECK(KindOf([] { SaveVocabulary(svt::Fixture(), "/nonexistent-dir/sub/v.nvcb"); }) == ErrorKind::kIo);
    CHECK(KindOf([] { LoadVocabulary("/nonexistent-dir/v.nvcb"); }) == ErrorKind::kIo);
  }

  TEST_CASE("synth is a pure function of its arguments") {
    CHECK(SynthVocabulary(6, 3, 42, 1.0) == SynthVocabulary(6, 3, 42, 1.0));
    CHECK_FALSE(SynthVocabulary(6, 3, 42, 1.0) == SynthVocabulary(6, 3, 43, 1.0));
    for (std::uint64_t s = 0; s < 50; ++s) {
      const Vocabulary v = SynthVocabulary(2, 1, s, 1.0);
      CHECK(std::abs(v.value(0, 0)) <= 1.0f);
      CHECK(std::abs(v.value(1, 0)) <= 1.0f);
    }
    CHECK(KindOf([] { SynthVocabulary(1, 1, 0, 1.0); }) == ErrorKind::kArgument);
    CHECK(KindOf([] { SynthVocabulary(4, 0, 0, 1.0); }) == ErrorKind::kArgument);
    CHECK(KindOf([] { SynthVocabulary(4, 1, 0, 0.0); }) == ErrorKind::kArgument);
  }

  TEST_CASE("validation rejects duplicates, non-finite values and shape mismatch") {
    CHECK(KindOf([] { Vocabulary({"a", "a"}, {0.f, 1.f}, 1); }) == ErrorKind::kValidation);
    CHECK(KindOf([] { Vocabulary({"a", "b"}, {0.f, NAN}, 1); }) == ErrorKind::kValidation);
    CHECK(KindOf([] { Vocabulary({"a", "b"}, {0.f, INFINITY}, 1); }) == ErrorKind::kValidation);
    CHECK(KindOf([] { Vocabulary({"a", "b"}, {0.f, 1.f, 2.f}, 1); }) == ErrorKind::kValidation);
  }

  TEST_CASE("every loaded row is finite") {
    const Vocabulary v = SynthVocabulary(100, 7, 3, 2.0);
    for (float x : ParseVocabulary(SerializeVocabulary(v)).matrix()) CHECK(std::isfinite(x));
  }

  TEST_CASE("index_of and find") {
    const Vocabulary v = svt::Fixture();
    CHECK(v.find("tok0003") == std::optional<std::size_t>(3));
    CHECK_FALSE(v.find("nope").has_value());
    CHECK_THROWS_AS(v.index_of("nope"), UnknownTokenError);
  }
}

TEST_SUITE("corpus") {
  TEST_CASE("two lines give two records") {
    const Vocabulary v = svt::Fixture();
    const auto recs = ParseCorpus("tok0000 tok0001\ttok0002\tu1;u2\t10\ntok0005\t\t\n", v);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].prompt == std::vector<std::size_t>{0, 1});
    CHECK(recs[0].code == std::vector<std::size_t>{2});
    CHECK(recs[0].tests == std::vector<std::string>{"u1", "u2"});
    CHECK(recs[0].pass_truth == std::optional<std::vector<bool>>({true, false}));
    CHECK(recs[1].code.empty());
  }

  TEST_CASE("unknown token reports token and line") {
    const Vocabulary v = svt::Fixture();
    try {
      ParseCorpus("tok0000\t\t\ntok0001 banana\t\t\n", v);
      FAIL("expected UnknownTokenError");
    } catch (const UnknownTokenError& e) {
      CHECK(e.token() == "banana");
      CHECK(e.line() == 2);
    }
  }

  TEST_CASE("malformed lines") {
    const Vocabulary v = svt::Fixture();
    CHECK(KindOf([&] { ParseCorpus("tok0000\n", v); }) == ErrorKind::kFormat);
    CHECK(KindOf([&] { ParseCorpus("\ttok0000\t\n", v); }) == ErrorKind::kFormat);
    CHECK(KindOf([&] { ParseCorpus("tok0000\t\tu1\t2\n", v); }) == ErrorKind::kFormat);
    CHECK(KindOf([&] { ParseCorpus("tok0000\t\tu1\t11\n", v); }) == ErrorKind::kFormat);
  }

  TEST_CASE("100 synthetic records round-trip") {
    svt::TempDir dir;
    const Vocabulary v = SynthVocabulary(20, 2, 1, 1.0);
    SeqRng rng(9);
    std::vector<CorpusRecord> recs(100);
    for (auto& r : recs) {
      for (std::size_t j = 0; j <= rng.below(10); ++j) r.prompt.push_back(rng.below(20));
      for (std::size_t j = 0; j < rng.below(10); ++j) r.code.push_back(rng.below(20));
      const std::size_t tests = rng.below(4);
      for (std::size_t j = 0; j < tests; ++j) r.tests.push_back("test_" + std::to_string(j));
      if (tests && rng.below(2)) {
        std::vector<bool> bits;
        for (std::size_t j = 0; j < tests; ++j) bits.push_back(rng.below(2) == 1);
        r.pass_truth = bits;
      }
    }
    SaveCorpus(recs, v, dir / "c.tsv");
    CHECK(LoadCorpus(dir / "c.tsv", v) == recs);
  }
}
