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
#include "splitvault/wire.hpp"

#include <fmt/format.h>

#include "splitvault/binary_io.hpp"
#include "splitvault/error.hpp"

namespace splitvault {
namespace {

void ExpectEnd(const ByteReader& r, const char* what) {
  if (r.remaining() != 0) {
    throw Error(ErrorKind::kFormat, fmt::format("{} payload has {} trailing bytes", what, r.remaining()));
  }
}

bool KnownType(std::uint8_t t) { return t >= 1 && t <= 9; }

}  // namespace

const char* ToString(FrameType type) {
  switch (type) {
    case FrameType::kHello: return "HELLO";
    case FrameType::kHelloAck: return "HELLO_ACK";
    case FrameType::kEmb: return "EMB";
    case FrameType::kEnriched: return "ENRICHED";
    case FrameType::kGradDown: return "GRAD_DOWN";
    case FrameType::kGradUp: return "GRAD_UP";
    case FrameType::kParamAck: return "PARAM_ACK";
    case FrameType::kError: return "ERROR";
    case FrameType::kBye: return "BYE";
  }
  return "?";
}

const char* ToString(ProtocolError code) {
  switch (code) {
    case ProtocolError::kVersion: return "VERSION";
    case ProtocolError::kDims: return "DIMS";
    case ProtocolError::kSeq: return "SEQ";
    case ProtocolError::kFormat: return "FORMAT";
  }
  return "?";
}

std::vector<std::uint8_t> EncodeFrame(const Frame& f) {
  if (f.payload.size() > kMaxPayload) {
    throw Error(ErrorKind::kOversize, fmt::format("payload of {} bytes exceeds {}", f.payload.size(), kMaxPayload));
  }
  ByteWriter w;
  w.magic("NOIR");
  w.u16(f.version);
  w.u8(static_cast<std::uint8_t>(f.type));
  w.u64(f.session);
  w.u32(static_cast<std::uint32_t>(f.payload.size()));
  w.bytes(f.payload);
  return std::move(w).take();
}

FrameHeader DecodeFrameHeader(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderSize) {
    throw Error(ErrorKind::kTruncated, fmt::format("frame header needs {} bytes, got {}", kFrameHeaderSize, bytes.size()));
  }
  ByteReader r(bytes.first(kFrameHeaderSize));
  r.expect_magic("NOIR");
  FrameHeader h;
  h.version = r.u16("version");
  const auto type = r.u8("type");
  if (!KnownType(type)) throw Error(ErrorKind::kFormat, fmt::format("unknown frame type {}", type));
  h.type = static_cast<FrameType>(type);
  h.session = r.u64("session");
  h.payload_len = r.u32("payload_len");
  if (h.payload_len > kMaxPayload) {
    throw Error(ErrorKind::kOversize, fmt::format("payload_len {} exceeds {}", h.payload_len, kMaxPayload));
  }
  return h;
}

Frame DecodeFrame(std::span<const std::uint8_t> bytes) {
  const FrameHeader h = DecodeFrameHeader(bytes);
  const std::size_t have = bytes.size() - kFrameHeaderSize;
  if (have < h.payload_len) {
    throw Error(ErrorKind::kTruncated, fmt::format("payload_len {} but only {} bytes follow", h.payload_len, have));
  }
  if (have > h.payload_len) {
    throw Error(ErrorKind::kFormat, fmt::format("{} bytes after the frame", have - h.payload_len));
  }
  Frame f;
  f.type = h.type;
  f.version = h.version;
  f.session = h.session;
  f.payload.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
  return f;
}

PayloadSchema SchemaOf(FrameType type) {
  switch (type) {
    case FrameType::kHello:
    case FrameType::kHelloAck: return PayloadSchema::kHello;
    case FrameType::kEmb:
    case FrameType::kEnriched:
    case FrameType::kGradDown:
    case FrameType::kGradUp: return PayloadSchema::kTensor;
    case FrameType::kParamAck: return PayloadSchema::kParamAck;
    case FrameType::kError: return PayloadSchema::kErrorCode;
    case FrameType::kBye: return PayloadSchema::kEmpty;
  }
  throw Error(ErrorKind::kFormat, "unknown frame type");
}

void ValidatePayload(FrameType type, std::span<const std::uint8_t> payload) {
  switch (SchemaOf(type)) {
    case PayloadSchema::kEmpty:
      if (!payload.empty()) throw Error(ErrorKind::kFormat, fmt::format("{} carries no payload", ToString(type)));
      return;
    case PayloadSchema::kHello: DecodeHello(payload); return;
    case PayloadSchema::kTensor: DecodeTensor(payload); return;
    case PayloadSchema::kErrorCode: DecodeErrorCode(payload); return;
    case PayloadSchema::kParamAck: DecodeParamAck(payload); return;
  }
}

std::vector<std::uint8_t> EncodeTensor(const Tensor& t) {
  if (t.values.size() != static_cast<std::size_t>(t.n) * t.d) {
    throw Error(ErrorKind::kDimensionMismatch,
                fmt::format("tensor {}x{} holds {} values", t.n, t.d, t.values.size()));
  }
  ByteWriter w;
  w.u32(t.n);
  w.u32(t.d);
  for (float v : t.values) w.f32(v);
  return std::move(w).take();
}

Tensor DecodeTensor(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  Tensor t;
  t.n = r.u32("n");
  t.d = r.u32("d");
  const std::uint64_t want = 4ull * t.n * t.d;
  if (r.remaining() != want) {
    throw Error(ErrorKind::kFormat,
                fmt::format("tensor {}x{} needs {} value bytes, payload has {}", t.n, t.d, want, r.remaining()));
  }
  t.values.resize(static_cast<std::size_t>(t.n) * t.d);
  for (auto& v : t.values) v = r.f32("value");
  return t;
}

std::vector<std::uint8_t> EncodeHello(const Hello& h) {
  ByteWriter w;
  w.u16(h.version);
  w.u8(static_cast<std::uint8_t>(h.mode));
  w.u32(h.m);
  w.u32(h.d);
  w.u32(h.vocab_size);
  w.u8(h.lora ? 1 : 0);
  return std::move(w).take();
}

Hello DecodeHello(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  Hello h;
  h.version = r.u16("version");
  const auto mode = r.u8("mode");
  if (mode > 1) throw Error(ErrorKind::kFormat, fmt::format("unknown session mode {}", mode));
  h.mode = static_cast<SessionMode>(mode);
  h.m = r.u32("m");
  h.d = r.u32("d");
  h.vocab_size = r.u32("vocab_size");
  const auto lora = r.u8("lora");
  if (lora > 1) throw Error(ErrorKind::kFormat, "lora flag must be 0 or 1");
  h.lora = lora == 1;
  ExpectEnd(r, "HELLO");
  return h;
}

std::vector<std::uint8_t> EncodeErrorCode(ProtocolError code) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(code));
  return std::move(w).take();
}

ProtocolError DecodeErrorCode(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  const auto c = r.u16("code");
  ExpectEnd(r, "ERROR");
  if (c < 1 || c > 4) throw Error(ErrorKind::kFormat, fmt::format("unknown error code {}", c));
  return static_cast<ProtocolError>(c);
}

std::vector<std::uint8_t> EncodeParamAck(const ParamAck& p) {
  ByteWriter w;
  w.f64(p.learning_rate);
  w.u32(p.count);
  return std::move(w).take();
}

ParamAck DecodeParamAck(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  ParamAck p;
  p.learning_rate = r.f64("learning_rate");
  p.count = r.u32("count");
  ExpectEnd(r, "PARAM_ACK");
  return p;
}

}  // namespace splitvault
