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
#include "splitvault/binary_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "splitvault/error.hpp"

namespace splitvault {

const char* ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument: return "ArgumentError";
    case ErrorKind::kFormat: return "FormatError";
    case ErrorKind::kValidation: return "ValidationError";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kIndex: return "IndexError";
    case ErrorKind::kUnknownToken: return "UnknownTokenError";
    case ErrorKind::kUnsegmentable: return "UnsegmentableError";
    case ErrorKind::kInfeasibleBudget: return "InfeasibleBudget";
    case ErrorKind::kTooLarge: return "TooLarge";
    case ErrorKind::kZeroLikelihood: return "ZeroLikelihood";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kEmptySequence: return "EmptySequence";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kTruncated: return "Truncated";
    case ErrorKind::kOversize: return "Oversize";
    case ErrorKind::kProtocol: return "ProtocolError";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kMissingFixture: return "MissingFixture";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", ToString(kind), message)),
      kind_(kind) {}

UnknownTokenError::UnknownTokenError(std::string token, std::size_t line)
    : Error(ErrorKind::kUnknownToken,
            line == 0 ? fmt::format("token '{}' not in vocabulary", token)
                      : fmt::format("line {}: token '{}' not in vocabulary",
                                    line, token)),
      token_(std::move(token)),
      line_(line) {}

UnsegmentableError::UnsegmentableError(std::size_t byte_offset)
    : Error(ErrorKind::kUnsegmentable,
            fmt::format("no vocabulary token matches at byte offset {}",
                        byte_offset)),
      byte_offset_(byte_offset) {}

InfeasibleBudgetError::InfeasibleBudgetError(std::vector<InfeasibleCell> cells,
                                             double minimal_total_epsilon)
    : Error(ErrorKind::kInfeasibleBudget,
            fmt::format("{} (token, feature) cell(s) below the feasibility "
                        "bound; minimal feasible total epsilon = {:.17g}",
                        cells.size(), minimal_total_epsilon)),
      cells_(std::move(cells)),
      minimal_total_(minimal_total_epsilon) {}

void ByteWriter::raw(const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  buf_.insert(buf_.end(), b, b + n);
}

void ByteWriter::string(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  raw(s.data(), s.size());
}

void ByteReader::need(std::size_t n, const char* field) const {
  if (remaining() < n) {
    throw Error(ErrorKind::kFormat,
                fmt::format("unexpected end of data reading {} (need {} "
                            "byte(s) at offset {}, have {})",
                            field, n, pos_, remaining()));
  }
}

namespace {
template <class T>
T ReadScalar(std::span<const std::uint8_t> data, std::size_t& pos) {
  T v;
  std::memcpy(&v, data.data() + pos, sizeof v);
  pos += sizeof v;
  return v;
}
}  // namespace

std::uint8_t ByteReader::u8(const char* f) { need(1, f); return ReadScalar<std::uint8_t>(data_, pos_); }
std::uint16_t ByteReader::u16(const char* f) { need(2, f); return ReadScalar<std::uint16_t>(data_, pos_); }
std::uint32_t ByteReader::u32(const char* f) { need(4, f); return ReadScalar<std::uint32_t>(data_, pos_); }
std::uint64_t ByteReader::u64(const char* f) { need(8, f); return ReadScalar<std::uint64_t>(data_, pos_); }
float ByteReader::f32(const char* f) { need(4, f); return ReadScalar<float>(data_, pos_); }
double ByteReader::f64(const char* f) { need(8, f); return ReadScalar<double>(data_, pos_); }

std::string ByteReader::string(const char* field) {
  const std::uint32_t n = u32(field);
  need(n, field);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n, const char* field) {
  need(n, field);
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect_magic(std::string_view magic) {
  auto got = bytes(magic.size(), "magic");
  if (std::memcmp(got.data(), magic.data(), magic.size()) != 0) {
    throw Error(ErrorKind::kFormat,
                fmt::format("bad magic: expected '{}'", magic));
  }
}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw Error(ErrorKind::kIo, fmt::format("read failed for '{}'", path.string()));
  }
  return out;
}

void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::kIo,
                fmt::format("cannot open '{}' for writing", path.string()));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) {
    throw Error(ErrorKind::kIo, fmt::format("write failed for '{}'", path.string()));
  }
}

}  // namespace splitvault
