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
#ifndef SPLITVAULT_TEST_RUNNER_HPP_
#define SPLITVAULT_TEST_RUNNER_HPP_

#include <string>
#include <vector>

#include "splitvault/metrics.hpp"

namespace splitvault {

// Runs unit tests through an operator-supplied shell command. The template
// may use {code_file} and {test_id}; exit status 0 counts as a pass.
struct TestRunnerConfig {
  std::string command_template;
  double timeout_seconds = 10.0;
  unsigned parallelism = 1;
};

// Replaces the placeholders with single-quoted shell words.
std::string ExpandCommand(const std::string& tmpl, const std::string& code_file,
                          const std::string& test_id);

// One row per candidate, one column per test id.
PassMatrix RunTests(const std::vector<std::string>& candidates,
                    const std::vector<std::string>& test_ids, const TestRunnerConfig& config);

}  // namespace splitvault

#endif  // SPLITVAULT_TEST_RUNNER_HPP_
