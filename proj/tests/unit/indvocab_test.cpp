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

#include "helpers.hpp"
#include "splitvault/binary_io.hpp"
#include "splitvault/indvocab.hpp"

using namespace splitvault;
using svt::KindOf;

namespace {
IndVocab Build(double eps_total = 6.0, std::uint64_t seed = 7) {
  return BuildIndVocab(svt::Fixture(), BudgetPlan::Uniform(eps_total, 3), seed, DenominatorPolicy::kExcludeSelf);
}
}  // namespace

TEST_SUITE("indvocab") {
  TEST_CASE("file round trip") {
    svt::TempDir dir;
    const IndVocab a = Build();
    SaveIndVocab(a, dir / "a.nind");
    const IndVocab b = LoadIndVocab(dir / "a.nind");
    CHECK(a == b);
    CHECK(SerializeIndVocab(b) == ReadFileBytes(dir / "a.nind"));
    CHECK(b.source_digest == VocabularyDigest(svt::Fixture()));
    CHECK(DigestHex(b.source_digest).size() == 64);
  }

  TEST_CASE("malformed files") {
    const auto bytes = SerializeIndVocab(Build());
    auto bad = bytes;
    bad[0] = 'X';
    CHECK(KindOf([&] { ParseIndVocab(bad); }) == ErrorKind::kFormat);
    bad = bytes;
    bad.push_back(1);
    CHECK(KindOf([&] { ParseIndVocab(bad); }) == ErrorKind::kFormat);
    bad = bytes;
    bad.resize(bytes.size() - 3);
    CHECK(KindOf([&] { ParseIndVocab(bad); }) == ErrorKind::kFormat);
  }

  TEST_CASE("digest depends on every value") {
    const Vocabulary v = svt::Fixture();
    std::vector<float> m(v.matrix().begin(), v.matrix().end());
    m[17] = std::nextafter(m[17], 1.0f);
    CHECK(VocabularyDigest(v) != VocabularyDigest(v.with_embeddings(m)));
  }

  TEST_CASE("audit passes on a two-token vocabulary") {
    const Vocabulary two = svt::Vocab({0.f, 1.f, 2.f, 0.f}, 2);
    const IndVocab ind = BuildIndVocab(two, BudgetPlan::Uniform(4.0, 2), 3, DenominatorPolicy::kExcludeSelf);
    const auto a = AuditIndVocab(ind, two);
    CHECK(a.ok());
    CHECK(a.effective.total <= 4.0 + 1e-9);
  }

  TEST_CASE("audit catches tampering") {
    const Vocabulary v = svt::Fixture();
    const IndVocab good = Build();
    const auto base = AuditIndVocab(good, v);
    CHECK(base.digest_ok);
    CHECK(base.rebuild_ok);
    CHECK(base.support_ok);

    SUBCASE("foreign value") {
      IndVocab bad = good;
      std::vector<float> m(good.randomized.matrix().begin(), good.randomized.matrix().end());
      m[4] = 123.0f;
      bad.randomized = good.randomized.with_embeddings(m);
      const auto a = AuditIndVocab(bad, v);
      CHECK_FALSE(a.support_ok);
      CHECK(a.foreign_cells == 1);
      CHECK_FALSE(a.rebuild_ok);
      CHECK_FALSE(a.ok());
    }
    SUBCASE("value swapped within the column") {
      IndVocab bad = good;
      std::vector<float> m(good.randomized.matrix().begin(), good.randomized.matrix().end());
      const float other = v.value(0, 1) == m[3 * 2 + 1] ? v.value(1, 1) : v.value(0, 1);
      m[3 * 2 + 1] = other;
      bad.randomized = good.randomized.with_embeddings(m);
      const auto a = AuditIndVocab(bad, v);
      CHECK(a.support_ok);
      CHECK_FALSE(a.rebuild_ok);
    }
    SUBCASE("wrong source") {
      const auto a = AuditIndVocab(good, SynthVocabulary(6, 3, 8, 0.5));
      CHECK_FALSE(a.digest_ok);
      CHECK_FALSE(a.ok());
    }
    SUBCASE("wrong seed in the header") {
      IndVocab bad = good;
      bad.seed += 1;
      CHECK_FALSE(AuditIndVocab(bad, v).rebuild_ok);
    }
  }

  TEST_CASE("builder rejects infeasible plans and mismatched splits") {
    const Vocabulary v = svt::Fixture();
    CHECK_THROWS_AS(IndVocabBuilder(v, BudgetPlan::Uniform(1e-7, 3), DenominatorPolicy::kExcludeSelf),
                    InfeasibleBudgetError);
    CHECK(KindOf([&] { IndVocabBuilder(v, BudgetPlan::Uniform(3.0, 2), DenominatorPolicy::kExcludeSelf); }) ==
          ErrorKind::kArgument);
  }
}
