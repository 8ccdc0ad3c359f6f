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
#include "splitvault/test_runner.hpp"

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include <fmt/format.h>

#include "splitvault/error.hpp"

namespace splitvault {
namespace {

std::string ShellQuote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

void ReplaceAll(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

std::string ExpandCommand(const std::string& tmpl, const std::string& code_file,
                          const std::string& test_id) {
  std::string cmd = tmpl;
  ReplaceAll(cmd, "{code_file}", ShellQuote(code_file));
  ReplaceAll(cmd, "{test_id}", ShellQuote(test_id));
  return cmd;
}

PassMatrix RunTests(const std::vector<std::string>& candidates,
                    const std::vector<std::string>& test_ids, const TestRunnerConfig& config) {
  if (config.command_template.empty()) {
    throw Error(ErrorKind::kArgument, "test runner needs a command template");
  }
  if (!(config.timeout_seconds > 0.0)) {
    throw Error(ErrorKind::kArgument, "test timeout must be > 0");
  }
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       fmt::format("splitvault-tests-{}", static_cast<long>(::getpid()));
  fs::create_directories(dir);
  std::vector<std::string> files;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto path = dir / fmt::format("candidate{}.py", i);
    std::ofstream(path, std::ios::binary) << candidates[i];
    files.push_back(path.string());
  }

  // Bytes, not vector<bool>: workers write neighbouring cells concurrently.
  std::vector<unsigned char> pass(candidates.size() * test_ids.size(), 0);
  const std::size_t jobs = candidates.size() * test_ids.size();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < jobs;) {
      const std::size_t c = k / test_ids.size();
      const std::size_t u = k % test_ids.size();
      const std::string cmd =
          fmt::format("timeout {} sh -c {} >/dev/null 2>&1", config.timeout_seconds,
                      ShellQuote(ExpandCommand(config.command_template, files[c], test_ids[u])));
      const int status = std::system(cmd.c_str());
      pass[k] = status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned n = std::max(1u, config.parallelism);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  PassMatrix result(candidates.size(), std::vector<bool>(test_ids.size(), false));
  for (std::size_t k = 0; k < pass.size(); ++k) result[k / test_ids.size()][k % test_ids.size()] = pass[k];
  std::error_code ec;
  fs::remove_all(dir, ec);
  return result;
}

}  // namespace splitvault
