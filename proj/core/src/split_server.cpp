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
#include "splitvault/split_server.hpp"

#include <thread>
#include <vector>

#include "splitvault/error.hpp"

namespace splitvault {
namespace {

class Reject {
 public:
  explicit Reject(ProtocolError code) : code(code) {}
  ProtocolError code;
};

}  // namespace

MiddleServer::MiddleServer(Middle middle) : base_(std::make_shared<const Middle>(std::move(middle))) {}

SessionSummary MiddleServer::serve(Transport& t) {
  SessionSummary summary;
  std::optional<Hello> hello;
  std::unique_ptr<Middle> own;  // tuning copy
  const Middle* model = base_.get();
  std::optional<Mat> pending;   // input of the last forward, for backward
  Middle::Grads accum;
  std::size_t accumulated = 0;

  auto reply = [&](FrameType type, std::vector<std::uint8_t> payload) {
    SendFrame(t, Frame{type, kProtocolVersion, summary.session, std::move(payload)});
  };

  try {
    while (true) {
      Frame f;
      try {
        f = RecvFrame(t);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kTruncated) break;  // peer went away
        throw Reject(ProtocolError::kFormat);
      }
      ++summary.frames_in;
      if (f.version != kProtocolVersion) throw Reject(ProtocolError::kVersion);
      try {
        ValidatePayload(f.type, f.payload);
      } catch (const Error&) {
        throw Reject(ProtocolError::kFormat);
      }
      if (!hello) {
        if (f.type != FrameType::kHello) throw Reject(ProtocolError::kSeq);
        const Hello h = DecodeHello(f.payload);
        if (h.version != kProtocolVersion) throw Reject(ProtocolError::kVersion);
        if (h.d != model->d || h.m == 0 || h.vocab_size < 2) throw Reject(ProtocolError::kDims);
        if (h.lora && (model->kind != MiddleKind::kAffine || h.mode != SessionMode::kTuning)) {
          throw Reject(ProtocolError::kDims);
        }
        hello = h;
        summary.session = next_session_.fetch_add(1);
        summary.tuning = h.mode == SessionMode::kTuning;
        if (summary.tuning) {
          own = std::make_unique<Middle>(*base_);
          model = own.get();
        }
        Hello ack = h;
        reply(FrameType::kHelloAck, EncodeHello(ack));
        continue;
      }
      if (f.session != summary.session) throw Reject(ProtocolError::kSeq);
      switch (f.type) {
        case FrameType::kEmb: {
          const Tensor in = DecodeTensor(f.payload);
          if (in.d != model->d || in.n == 0) throw Reject(ProtocolError::kDims);
          const Mat x = FromTensor(in);
          if (summary.tuning) pending = x;
          reply(FrameType::kEnriched, EncodeTensor(ToTensor(model->forward(x))));
          break;
        }
        case FrameType::kGradDown: {
          if (!summary.tuning || !pending) throw Reject(ProtocolError::kSeq);
          const Tensor g = DecodeTensor(f.payload);
          if (g.d != model->d || g.n != pending->rows()) throw Reject(ProtocolError::kDims);
          Middle::Grads grads;
          const bool lora = hello->lora;
          const Mat dx = model->backward(*pending, FromTensor(g), lora ? &grads : nullptr);
          if (lora) {
            if (accumulated == 0) {
              accum = grads;
            } else {
              accum.lora_a += grads.lora_a;
              accum.lora_b += grads.lora_b;
            }
            ++accumulated;
          }
          pending.reset();
          reply(FrameType::kGradUp, EncodeTensor(ToTensor(dx)));
          break;
        }
        case FrameType::kParamAck: {
          if (!summary.tuning || pending) throw Reject(ProtocolError::kSeq);
          const ParamAck p = DecodeParamAck(f.payload);
          std::uint32_t applied = 0;
          if (hello->lora && accumulated > 0) {
            const double scale = 1.0 / static_cast<double>(p.count ? p.count : accumulated);
            accum.lora_a *= scale;
            accum.lora_b *= scale;
            own->apply(accum, p.learning_rate);
            applied = static_cast<std::uint32_t>(accumulated);
          }
          accumulated = 0;
          reply(FrameType::kParamAck, EncodeParamAck(ParamAck{p.learning_rate, applied}));
          break;
        }
        case FrameType::kBye:
          reply(FrameType::kBye, {});
          if (own) summary.middle = *own;
          t.close();
          return summary;
        default:
          throw Reject(ProtocolError::kSeq);
      }
    }
  } catch (const Reject& r) {
    summary.error = r.code;
    try {
      reply(FrameType::kError, EncodeErrorCode(r.code));
    } catch (const Error&) {
    }
  } catch (const Error&) {
    // Transport failure while replying; nothing left to tell the peer.
  }
  if (own) summary.middle = *own;
  t.close();
  return summary;
}

void ServeTcp(TcpListener& listener, MiddleServer& server) {
  std::vector<std::jthread> sessions;
  while (auto conn = listener.accept()) {
    sessions.emplace_back([&server, c = std::shared_ptr<Transport>(std::move(conn))] {
      try {
        server.serve(*c);
      } catch (const std::exception&) {
      }
    });
  }
}

}  // namespace splitvault
