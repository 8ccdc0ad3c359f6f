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
#ifndef SPLITVAULT_ERROR_HPP_
#define SPLITVAULT_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitvault {

enum class ErrorKind {
  kArgument,
  kFormat,
  kValidation,
  kIo,
  kIndex,
  kUnknownToken,
  kUnsegmentable,
  kInfeasibleBudget,
  kTooLarge,
  kZeroLikelihood,
  kEmptyCorpus,
  kEmptySequence,
  kLengthMismatch,
  kDimensionMismatch,
  kTruncated,
  kOversize,
  kProtocol,
  kNonFiniteLoss,
  kMissingFixture,
};

const char* ToString(ErrorKind kind);

// Base of every error raised by the library. The CLI maps any Error to exit
// code 1; usage problems are reported separately by the argument parser.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UnknownTokenError : public Error {
 public:
  UnknownTokenError(std::string token, std::size_t line);
  const std::string& token() const noexcept { return token_; }
  // 1-based line in the source file, 0 when not read from a file.
  std::size_t line() const noexcept { return line_; }

 private:
  std::string token_;
  std::size_t line_;
};

class UnsegmentableError : public Error {
 public:
  explicit UnsegmentableError(std::size_t byte_offset);
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

struct InfeasibleCell {
  std::size_t token = 0;
  std::size_t feature = 0;
  double requested = 0.0;
  double minimum = 0.0;
};

// Raised when a per-feature budget lies below the feasibility bound
// (max spread of |e_t - e_k| divided by m). Never silently clamped.
class InfeasibleBudgetError : public Error {
 public:
  InfeasibleBudgetError(std::vector<InfeasibleCell> cells,
                        double minimal_total_epsilon);
  const std::vector<InfeasibleCell>& cells() const noexcept { return cells_; }
  double minimal_total_epsilon() const noexcept { return minimal_total_; }

 private:
  std::vector<InfeasibleCell> cells_;
  double minimal_total_;
};

}  // namespace splitvault

#endif  // SPLITVAULT_ERROR_HPP_
