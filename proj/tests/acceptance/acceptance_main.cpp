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
// Acceptance runner: every criterion, one PASS/FAIL line each, exit 1 on
// any failure. ctest registers one entry per criterion via --criterion.
#include <cstdio>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "splitvault/error.hpp"
#include "splitvault/repro.hpp"

#ifndef SPLITVAULT_FIXTURE_DIR
#define SPLITVAULT_FIXTURE_DIR "fixtures"
#endif

int main(int argc, char** argv) {
  CLI::App app{"splitvault acceptance suite"};
  std::string dir = SPLITVAULT_FIXTURE_DIR;
  std::set<int> only;
  unsigned threads = 0;
  app.add_option("--fixtures", dir, "fixture directory");
  app.add_option("--criterion", only, "run only these criteria")->check(CLI::Range(1, splitvault::kCriterionCount));
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  CLI11_PARSE(app, argc, argv);

  try {
    splitvault::ReproOptions opt;
    opt.only = only;
    opt.threads = threads;
    const auto report = splitvault::RunReproductionSuite(dir, opt);
    std::fputs(splitvault::FormatReproReport(report).c_str(), stdout);
    return report.all_passed() ? 0 : 1;
  } catch (const splitvault::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
