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

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "splitvault/arr.hpp"
#include "splitvault/indvocab.hpp"
#include "splitvault/metrics.hpp"
#include "splitvault/perturbation.hpp"
#include "splitvault/rng.hpp"
#include "splitvault/test_runner.hpp"

using namespace splitvault;
using svt::KindOf;
using S = std::vector<std::string>;

namespace {
// Multiset overlap by sorting both sides.
std::size_t SortedOverlap(std::vector<int> a, std::vector<int> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out.size();
}
}  // namespace

TEST_SUITE("eval-metrics") {
  TEST_CASE("bleu") {
    const S abcd{"a", "b", "c", "d"}, abxy{"a", "b", "x", "y"};
    CHECK(Bleu(abcd, abcd) == 100.0);
    CHECK(Bleu(abcd, abxy) == doctest::Approx(50.0).epsilon(1e-15));
    CHECK(Bleu(abcd, abcd, 4) == doctest::Approx(100.0));
    // 2-gram: {ab} of 3 -> sqrt(2/4 * 1/3).
    CHECK(Bleu(abcd, abxy, 2) == doctest::Approx(100.0 * std::sqrt(0.5 / 3.0)));
    const S ab{"a", "b"};
    CHECK(Bleu(ab, abcd) == doctest::Approx(100.0 * std::exp(1.0 - 2.0)));
    CHECK(Bleu(ab, abcd) < 100.0);
    // Clipping: "a a a a" against "a b c d" counts one hit.
    CHECK(Bleu(S{"a", "a", "a", "a"}, abcd) == doctest::Approx(25.0));
    CHECK(Bleu(S{"z"}, abcd, 2) == 0.0);
    CHECK(KindOf([&] { Bleu(S{}, abcd); }) == ErrorKind::kEmptySequence);
    CHECK(KindOf([&] { Bleu(abcd, S{}); }) == ErrorKind::kEmptySequence);
    CHECK(KindOf([&] { Bleu(abcd, abcd, 0); }) == ErrorKind::kArgument);
  }

  TEST_CASE("rouge") {
    const S abcd{"a", "b", "c", "d"}, abxy{"a", "b", "x", "y"};
    CHECK(RougeF1(abcd, abcd) == 1.0);
    CHECK(RougeF1(abcd, abxy) == doctest::Approx(0.5));
    CHECK(RougeF1(abcd, S{"p", "q"}) == 0.0);
    // p = 1/2, r = 1/4.
    CHECK(RougeF1(S{"a", "z"}, abcd) == doctest::Approx(2 * 0.5 * 0.25 / 0.75));
    CHECK(KindOf([&] { RougeF1(S{}, abcd); }) == ErrorKind::kEmptySequence);
  }

  TEST_CASE("identity on equal-length pairs") {
    SeqRng rng(71);
    for (int k = 0; k < 100; ++k) {
      const std::size_t len = 1 + rng.below(30);
      std::vector<int> x(len), y(len);
      for (auto& v : x) v = int(rng.below(8));
      for (auto& v : y) v = int(rng.below(8));
      const double c = double(SortedOverlap(x, y)) / double(len);
      CHECK(RougeF1(x, y) == doctest::Approx(c).epsilon(1e-12));
      CHECK(Bleu(x, y) / 100.0 == doctest::Approx(c).epsilon(1e-12));
      CHECK(Crt(x, y) == doctest::Approx(c).epsilon(1e-12));
      for (std::size_t n = 1; n <= len; ++n) {
        CHECK(Bleu(x, x, n) == doctest::Approx(100.0));
        CHECK(RougeF1(x, x, n) == doctest::Approx(1.0));
      }
    }
  }

  TEST_CASE("crt") {
    const S abcd{"a", "b", "c", "d"};
    CHECK(Crt(abcd, abcd) == 1.0);
    CHECK(Crt(abcd, S{"a", "b", "x", "y"}) == 0.5);
    CHECK(Crt(abcd, S{}) == 0.0);
    // Corpus mean over three pairs: (1 + 0.5 + 0) / 3.
    const std::vector<std::pair<S, S>> pairs{{abcd, abcd}, {abcd, {"b", "a"}}, {abcd, {"q"}}};
    double sum = 0;
    for (const auto& [t, r] : pairs) sum += Crt(t, r);
    CHECK(sum / 3 == doctest::Approx(0.5));
    CHECK(KindOf([] { Crt(S{}, S{"a"}); }) == ErrorKind::kEmptySequence);
  }

  TEST_CASE("leak") {
    const std::string truth =
        "import numpy as np\n"
        "def find_first_duplicate(nums):\n"
        "    seen = set()\n"
        "    for n in nums:\n"
        "        if n in seen:\n"
        "            return n\n"
        "        seen.add(n)\n"
        "    return -1\n";
    const auto ids = SensitiveIdentifiers(truth);
    CHECK(ids.count("numpy"));
    CHECK(ids.count("np"));
    CHECK(ids.count("find_first_duplicate"));
    CHECK(ids.count("seen"));
    CHECK_FALSE(ids.count("import"));
    CHECK(Leak(truth, "x = find_first_duplicate([1])") == 1);
    CHECK(Leak(truth, "def find\n\n   ;; duplicate first") == 0);
    CHECK(Leak(truth, "total = 0") == 0);
    CHECK(Leak(truth, "seen") == 1);
    CHECK(Leak("# only a comment\n", "anything goes") == 0);
    CHECK(Leak("a, b = 1, 2\n", "print(b)") == 1);
    CHECK(IdentifierTokens("x1 = foo(bar_2) + 3") == S{"x1", "foo", "bar_2"});
  }

  TEST_CASE("fusi") {
    CHECK(*Fusi({true, true, false}, {true, true, false}) == 1.0);
    CHECK(*Fusi({true, true, true}, {true, false, true}) == doctest::Approx(2.0 / 3.0));
    CHECK_FALSE(Fusi({false, false}, {true, true}).has_value());
    CHECK(KindOf([] { Fusi({true}, {true, false}); }) == ErrorKind::kLengthMismatch);
    // Tests the truth fails never move the score.
    SeqRng rng(5);
    for (int k = 0; k < 200; ++k) {
      std::vector<bool> t(8), r(8);
      for (std::size_t i = 0; i < 8; ++i) {
        t[i] = rng.below(2);
        r[i] = rng.below(2);
      }
      const auto base = Fusi(t, r);
      for (std::size_t i = 0; i < 8; ++i) {
        if (t[i]) continue;
        auto r2 = r;
        r2[i] = !r2[i];
        CHECK(Fusi(t, r2) == base);
      }
    }
  }

  TEST_CASE("pass at r") {
    CHECK(PassAtR(2, 2, 1) == 1.0);
    CHECK(PassAtR(2, 1, 1) == 0.5);
    // Enumerate every 3-subset of 6 candidates, 2 of them correct.
    std::size_t hit = 0, total = 0;
    for (unsigned mask = 0; mask < 64; ++mask) {
      if (__builtin_popcount(mask) != 3) continue;
      ++total;
      if (mask & 0b11) ++hit;
    }
    CHECK(total == 20);
    CHECK(PassAtR(6, 2, 3) == double(hit) / double(total));
    for (std::uint64_t n = 1; n <= 12; ++n) {
      for (std::uint64_t c = 0; c <= n; ++c) {
        CHECK(PassAtR(n, c, 1) == doctest::Approx(double(c) / double(n)).epsilon(1e-15));
        for (std::uint64_t r = 1; r <= n; ++r) {
          if (c < n) CHECK(PassAtR(n, c + 1, r) >= PassAtR(n, c, r));
          if (r < n) CHECK(PassAtR(n, c, r + 1) >= PassAtR(n, c, r));
        }
      }
    }
    CHECK(PassAtR(400, 3, 200) == doctest::Approx(1.0 - (200.0 * 199 * 198) / (400.0 * 399 * 398)));
    CHECK(KindOf([] { PassAtR(2, 3, 1); }) == ErrorKind::kArgument);
    CHECK(KindOf([] { PassAtR(2, 1, 0); }) == ErrorKind::kArgument);
    CHECK(KindOf([] { PassAtR(2, 1, 3); }) == ErrorKind::kArgument);
  }

  TEST_CASE("simplified code bleu") {
    const S code{"def", "f", "(", "x", ")", ":", "return", "x"};
    CHECK(SimplifiedCodeBleu(code, code) == doctest::Approx(100.0));
    // Keyword hits count 5x in the weighted half.
    const S kw{"def", "return", "q", "r"}, ref{"def", "return", "x", "y"};
    const double bleu2 = Bleu(kw, ref, 2);
    CHECK(SimplifiedCodeBleu(kw, ref) == doctest::Approx(0.5 * bleu2 + 0.5 * 100.0 * 10.0 / 12.0));
    CHECK(SimplifiedCodeBleu(S{"p"}, S{"q"}) == 0.0);
  }

  TEST_CASE("pass matrix text") {
    const auto m = ParsePassMatrix("101\n\n011\n");
    REQUIRE(m.size() == 2);
    CHECK(m[0] == std::vector<bool>{true, false, true});
    CHECK(FormatPassMatrix(m) == "101\n011\n");
    CHECK(KindOf([] { ParsePassMatrix("10\n1x\n"); }) == ErrorKind::kFormat);
    CHECK(KindOf([] { ParsePassMatrix("10\n101\n"); }) == ErrorKind::kFormat);
  }
}

TEST_SUITE("perturbation") {
  TEST_CASE("identity copy moves nothing") {
    const auto v = svt::Fixture();
    const std::vector<std::vector<std::size_t>> prompts{{0, 1, 2, 3}, {5, 5, 4}};
    const auto s = MeasurePerturbation(v, v, prompts, 100, 1);
    CHECK(s.percent_tokens_changed == 0.0);
    CHECK(s.percent_strings_changed == 0.0);
    CHECK(s.mean_l1() == 0.0);
    CHECK(s.mean_bigram_cos_change() == 0.0);
    CHECK(s.mean_pairwise_cos_change() == 0.0);
    CHECK(s.l1_distances.size() == 7);
    CHECK(s.bigram_cos_changes.size() == 5);
  }

  TEST_CASE("randomized vocabulary against a Laplace baseline") {
    const auto v = svt::Fixture();
    const double eps_i = 1.0;
    const auto ind = BuildIndVocab(v, BudgetPlan::Uniform(eps_i * 3, 3), 9, DenominatorPolicy::kExcludeSelf);
    SeqRng rng(2);
    std::vector<std::vector<std::size_t>> prompts(40);
    for (auto& p : prompts) {
      p.resize(8);
      for (auto& t : p) t = rng.below(6);
    }
    // Matched scale: widest column range over eps_i.
    double range = 0;
    for (std::size_t f = 0; f < 3; ++f) {
      const auto col = v.column(f);
      range = std::max(range, double(*std::max_element(col.begin(), col.end()) -
                                     *std::min_element(col.begin(), col.end())));
    }
    const auto r = PerturbationAnalysis(v, ind.randomized, prompts, 500, 4, range / eps_i);
    REQUIRE(r.laplace.has_value());
    CHECK(r.randomized.percent_strings_changed == 0.0);
    CHECK(r.randomized.percent_tokens_changed > 0.0);
    CHECK(r.randomized.mean_l1() < r.laplace->mean_l1());
    for (const auto* s : {&r.randomized, &*r.laplace}) {
      for (double c : s->bigram_cos_changes) CHECK((c >= 0.0 && c <= 2.0));
      for (double c : s->pairwise_cos_changes) CHECK((c >= 0.0 && c <= 2.0));
    }
    CHECK(KindOf([&] { MeasurePerturbation(v, svt::Vocab({1, 2, 3, 4}, 2), prompts, 1, 1); }) ==
          ErrorKind::kDimensionMismatch);
    CHECK(KindOf([&] { LaplaceNoised(v, 0.0, 1); }) == ErrorKind::kArgument);
  }

  TEST_CASE("cosine") {
    const std::vector<float> a{1, 0}, b{0, 1}, c{-2, 0};
    CHECK(Cosine(a, a) == doctest::Approx(1.0));
    CHECK(Cosine(a, b) == doctest::Approx(0.0));
    CHECK(Cosine(a, c) == doctest::Approx(-1.0));
  }
}

TEST_SUITE("test-runner") {
  TEST_CASE("command expansion quotes its arguments") {
    CHECK(ExpandCommand("python {code_file} -k {test_id}", "/tmp/a b.py", "t'1") ==
          "python '/tmp/a b.py' -k 't'\\''1'");
  }

  TEST_CASE("runs a shell command per candidate and test") {
    TestRunnerConfig cfg{"grep -q -e {test_id} {code_file}", 5.0, 2};
    const auto m = RunTests({"alpha beta", "beta", "gamma"}, {"alpha", "beta"}, cfg);
    CHECK(m == PassMatrix{{true, true}, {false, true}, {false, false}});
    TestRunnerConfig slow{"sleep 3", 0.2, 1};
    CHECK(RunTests({"x"}, {"t"}, slow) == PassMatrix{{false}});
    CHECK(KindOf([] { RunTests({"x"}, {"t"}, {}); }) == ErrorKind::kArgument);
  }
}
