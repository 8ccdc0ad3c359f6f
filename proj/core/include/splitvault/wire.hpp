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
#ifndef SPLITVAULT_WIRE_HPP_
#define SPLITVAULT_WIRE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace splitvault {

// Frame layout (little-endian):
//   "NOIR" | version u16 | type u8 | session u64 | payload_len u32 | payload
enum class FrameType : std::uint8_t {
  kHello = 1,
  kHelloAck = 2,
  kEmb = 3,
  kEnriched = 4,
  kGradDown = 5,
  kGradUp = 6,
  kParamAck = 7,
  kError = 8,
  kBye = 9,
};

inline constexpr std::array<FrameType, 9> kAllFrameTypes = {
    FrameType::kHello,   FrameType::kHelloAck, FrameType::kEmb,
    FrameType::kEnriched, FrameType::kGradDown, FrameType::kGradUp,
    FrameType::kParamAck, FrameType::kError,   FrameType::kBye};

const char* ToString(FrameType type);

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 19;
inline constexpr std::uint32_t kMaxPayload = 64u << 20;

struct Frame {
  FrameType type = FrameType::kBye;
  std::uint16_t version = kProtocolVersion;
  std::uint64_t session = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct FrameHeader {
  std::uint16_t version = 0;
  FrameType type = FrameType::kBye;
  std::uint64_t session = 0;
  std::uint32_t payload_len = 0;
};

std::vector<std::uint8_t> EncodeFrame(const Frame& frame);
// Validates magic and type; throws kFormat, or kOversize above kMaxPayload.
FrameHeader DecodeFrameHeader(std::span<const std::uint8_t> header);
// Exactly one frame: throws kTruncated when bytes end early, kFormat on
// trailing bytes.
Frame DecodeFrame(std::span<const std::uint8_t> bytes);

// --- payloads ----------------------------------------------------------------
// Every frame type has one fixed payload schema. None of them has a field
// for strings, token indices or vocabulary matrices.
enum class PayloadSchema { kEmpty, kHello, kTensor, kErrorCode, kParamAck };
PayloadSchema SchemaOf(FrameType type);
// Throws kFormat unless the payload parses exactly under SchemaOf(type).
void ValidatePayload(FrameType type, std::span<const std::uint8_t> payload);

struct Tensor {
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::vector<float> values;  // row-major n x d

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

// n u32 | d u32 | n*d f32; 8 + 4nd bytes.
std::vector<std::uint8_t> EncodeTensor(const Tensor& t);
Tensor DecodeTensor(std::span<const std::uint8_t> payload);

enum class SessionMode : std::uint8_t { kInference = 0, kTuning = 1 };

struct Hello {
  std::uint16_t version = kProtocolVersion;
  SessionMode mode = SessionMode::kInference;
  std::uint32_t m = 0;
  std::uint32_t d = 0;
  std::uint32_t vocab_size = 0;
  bool lora = false;

  friend bool operator==(const Hello&, const Hello&) = default;
};

std::vector<std::uint8_t> EncodeHello(const Hello& h);
Hello DecodeHello(std::span<const std::uint8_t> payload);

enum class ProtocolError : std::uint16_t { kVersion = 1, kDims = 2, kSeq = 3, kFormat = 4 };
const char* ToString(ProtocolError code);
std::vector<std::uint8_t> EncodeErrorCode(ProtocolError code);
ProtocolError DecodeErrorCode(std::span<const std::uint8_t> payload);

struct ParamAck {
  double learning_rate = 0.0;
  std::uint32_t count = 0;

  friend bool operator==(const ParamAck&, const ParamAck&) = default;
};
std::vector<std::uint8_t> EncodeParamAck(const ParamAck& p);
ParamAck DecodeParamAck(std::span<const std::uint8_t> payload);

}  // namespace splitvault

#endif  // SPLITVAULT_WIRE_HPP_
