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
#include <filesystem>
#include <fstream>
#include <iterator>

#include "helpers.hpp"
#include "splitvault/indvocab.hpp"
#include "splitvault/repro.hpp"

using namespace splitvault;
namespace fs = std::filesystem;

namespace {
bool HasLine(const CriterionResult& r, const std::string& prefix, const std::string& needle) {
  return std::any_of(r.details.begin(), r.details.end(), [&](const std::string& l) {
    return l.rfind(prefix, 0) == 0 && l.find(needle) != std::string::npos;
  });
}
}  // namespace

TEST_SUITE("repro") {
  TEST_CASE("a tampered randomized vocabulary is caught") {
    svt::TempDir dir;
    fs::copy(SPLITVAULT_FIXTURE_DIR, dir.path(), fs::copy_options::recursive);
    const std::string name = fixtures::IndVocabName("exclude-self", 1.0);
    IndVocab ind = LoadIndVocab(dir / name);
    std::vector<float> m(ind.randomized.matrix().begin(), ind.randomized.matrix().end());
    m[4] += 0.25f;
    ind.randomized = ind.randomized.with_embeddings(std::move(m));
    SaveIndVocab(ind, dir / name);

    ReproOptions opt;
    opt.only = {1};
    const auto rep = RunReproductionSuite(dir.path(), opt);
    REQUIRE(rep.criteria.size() == 1);
    CHECK_FALSE(rep.criteria[0].passed());
    CHECK(HasLine(rep.criteria[0], "FAIL", name));
    CHECK(HasLine(rep.criteria[0], "FAIL", "rebuild false"));
  }

  TEST_CASE("missing fixtures are reported as such") {
    svt::TempDir dir;
    ReproOptions opt;
    opt.only = {1};
    CHECK(svt::KindOf([&] { RunReproductionSuite(dir.path(), opt); }) == ErrorKind::kMissingFixture);
  }

  TEST_CASE("fixture generation is deterministic") {
    svt::TempDir a, b;
    WriteFixtures(a.path());
    WriteFixtures(b.path());
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a.path())) {
      ++files;
      const auto other = b.path() / e.path().filename();
      REQUIRE(fs::exists(other));
      CHECK(fs::file_size(e.path()) == fs::file_size(other));
      std::ifstream fa(e.path(), std::ios::binary), fb(other, std::ios::binary);
      CHECK(std::string(std::istreambuf_iterator<char>(fa), {}) == std::string(std::istreambuf_iterator<char>(fb), {}));
    }
    CHECK(files == 14);
  }
}
