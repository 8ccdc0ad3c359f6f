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

#include <thread>

#include "helpers.hpp"
#include "splitvault/indvocab.hpp"
#include "splitvault/ltokenizer.hpp"
#include "splitvault/oracle.hpp"
#include "splitvault/split_client.hpp"
#include "splitvault/split_server.hpp"
#include "splitvault/toy_stack.hpp"
#include "splitvault/transport.hpp"
#include "splitvault/wire.hpp"

using namespace splitvault;
using svt::KindOf;

namespace {

// A server thread on one end of an in-memory pipe.
class Loopback {
 public:
  explicit Loopback(Middle middle) : server_(std::move(middle)) {
    auto [a, b] = MakeLoopbackPair();
    client_ = std::move(a);
    end_ = std::move(b);
    thread_ = std::thread([this] { summary_ = server_.serve(*end_); });
  }
  ~Loopback() { finish(); }
  Transport& client() { return *client_; }
  const SessionSummary& finish() {
    if (thread_.joinable()) {
      client_->close();
      thread_.join();
    }
    return summary_;
  }

 private:
  MiddleServer server_;
  std::unique_ptr<Transport> client_, end_;
  std::thread thread_;
  SessionSummary summary_;
};

Hello HelloFor(std::size_t m, std::size_t d, std::size_t v, SessionMode mode, bool lora) {
  return Hello{kProtocolVersion, mode, std::uint32_t(m), std::uint32_t(d), std::uint32_t(v), lora};
}

Mat RandomMat(std::size_t n, std::size_t d, std::uint64_t seed) {
  SeqRng rng(seed);
  Mat x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  return x;
}

struct Setup {
  Vocabulary vocab = svt::Fixture();
  IndVocab ind = BuildIndVocab(vocab, BudgetPlan::Uniform(6.0, 3), 3, DenominatorPolicy::kExcludeSelf);
  TokenPermutation perm = GeneratePermutation(6, 5);
  std::vector<CorpusRecord> batch{{{0, 1, 2}, {3, 4}, {}, {}}, {{5, 5}, {1, 0, 2}, {}, {}}};
};

}  // namespace

TEST_SUITE("wire") {
  TEST_CASE("tensor frame round trip") {
    Tensor t{3, 4, {}};
    for (int i = 0; i < 12; ++i) t.values.push_back(0.5f * float(i) - 2.0f);
    const Frame f{FrameType::kEmb, kProtocolVersion, 77, EncodeTensor(t)};
    const auto bytes = EncodeFrame(f);
    CHECK(bytes.size() == kFrameHeaderSize + 8 + 4 * 12);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "NOIR");
    CHECK(bytes[6] == std::uint8_t(FrameType::kEmb));
    const Frame back = DecodeFrame(bytes);
    CHECK(back == f);
    CHECK(DecodeTensor(back.payload) == t);

    auto bad = bytes;
    std::copy_n("XXXX", 4, bad.begin());
    CHECK(KindOf([&] { DecodeFrame(bad); }) == ErrorKind::kFormat);
    CHECK(KindOf([&] { DecodeFrame(std::span(bytes).first(bytes.size() - 1)); }) == ErrorKind::kTruncated);
    CHECK(KindOf([&] { DecodeFrame(std::span(bytes).first(10)); }) == ErrorKind::kTruncated);
    auto longer = bytes;
    longer.push_back(0);
    CHECK(KindOf([&] { DecodeFrame(longer); }) == ErrorKind::kFormat);
    auto unknown = bytes;
    unknown[6] = 200;
    CHECK(KindOf([&] { DecodeFrame(unknown); }) == ErrorKind::kFormat);
  }

  TEST_CASE("small payloads") {
    const Hello h{kProtocolVersion, SessionMode::kTuning, 3, 8, 6, true};
    CHECK(DecodeHello(EncodeHello(h)) == h);
    const ParamAck p{0.125, 9};
    CHECK(DecodeParamAck(EncodeParamAck(p)) == p);
    for (auto e : {ProtocolError::kVersion, ProtocolError::kDims, ProtocolError::kSeq, ProtocolError::kFormat}) {
      CHECK(DecodeErrorCode(EncodeErrorCode(e)) == e);
    }
    const std::vector<std::uint8_t> one{1};
    CHECK(KindOf([&] { ValidatePayload(FrameType::kBye, one); }) == ErrorKind::kFormat);
    CHECK(KindOf([&] { ValidatePayload(FrameType::kEmb, one); }) != ErrorKind::kArgument);
    for (auto type : kAllFrameTypes) CHECK(std::string(ToString(type)).size() > 0);
  }

  TEST_CASE("tensor with mismatched size is rejected") {
    Tensor t{2, 2, {1, 2, 3}};
    auto bytes = EncodeTensor(Tensor{2, 2, {1, 2, 3, 4}});
    bytes.pop_back();
    CHECK_THROWS_AS(DecodeTensor(bytes), Error);
  }
}

TEST_SUITE("split-protocol") {
  TEST_CASE("identity middle echoes the embeddings bit for bit") {
    const auto stack = MakeToyStack({3, 4, 6, MiddleKind::kIdentity, 0, 1});
    Loopback srv(stack.middle);
    SplitSession s(srv.client(), HelloFor(3, 4, 6, SessionMode::kInference, false));
    const Mat x = Quantize(RandomMat(3, 4, 2));
    const Mat y = s.forward(x);
    REQUIRE(y.rows() == 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(y.data()[i] == x.data()[i]);
    s.close();
    const auto sum = srv.finish();
    CHECK_FALSE(sum.error.has_value());
  }

  TEST_CASE("affine middle output") {
    const auto stack = MakeToyStack({3, 8, 6, MiddleKind::kAffine, 2, 4});
    Loopback srv(stack.middle);
    SplitSession s(srv.client(), HelloFor(3, 8, 6, SessionMode::kInference, false));
    const Mat x = Quantize(RandomMat(5, 8, 3));
    const auto& md = stack.middle;
    Mat expect = x * (md.m + md.lora_a * md.lora_b);
    expect.rowwise() += md.c;
    CHECK(RelativeError(s.forward(x), expect) <= 1e-6);
    s.close();
  }

  TEST_CASE("rigged decoder drives greedy generation") {
    Setup st;
    auto stack = MakeToyStack({3, 8, 6, MiddleKind::kAffine, 2, 6});
    stack.client.decoder.w.back().setZero();
    stack.client.decoder.b.back().setZero();
    stack.client.decoder.b.back()(5) = 100.0;
    Loopback srv(stack.middle);
    SplitSession s(srv.client(), HelloFor(3, 8, 6, SessionMode::kInference, false));
    const std::vector<std::size_t> prompt{0, 1};
    const auto out = ClientGenerate(prompt, st.ind, st.perm, stack.client, s, {0.0, 4, 1});
    CHECK(out == std::vector<std::size_t>{5, 5, 5, 5});
    s.close();
  }

  TEST_CASE("generation is reproducible") {
    Setup st;
    const auto stack = MakeToyStack({3, 8, 6, MiddleKind::kAffine, 2, 7});
    std::vector<std::vector<std::size_t>> runs;
    for (int k = 0; k < 2; ++k) {
      Loopback srv(stack.middle);
      SplitSession s(srv.client(), HelloFor(3, 8, 6, SessionMode::kInference, false));
      const std::vector<std::size_t> prompt{2, 3, 4};
      runs.push_back(ClientGenerate(prompt, st.ind, st.perm, stack.client, s, {0.8, 8, 99}));
      s.close();
    }
    CHECK(runs[0] == runs[1]);
    CHECK(runs[0].size() == 8);
  }

  TEST_CASE("tuning round matches the monolithic oracle") {
    Setup st;
    const auto stack = MakeToyStack({3, 8, 6, MiddleKind::kAffine, 2, 8});
    Loopback srv(stack.middle);
    SplitSession s(srv.client(), HelloFor(3, 8, 6, SessionMode::kTuning, true));
    ClientModel model = stack.client;
    const auto r = StuningRound(st.batch, st.ind, st.perm, model, s, 0.01);
    s.close();
    const auto& sum = srv.finish();
    CHECK(sum.tuning);
    for (std::size_t k = 0; k < st.batch.size(); ++k) {
      const auto ex = MakeTuningExample(st.batch[k], st.ind, st.perm);
      const auto o = MonolithicOracle(stack, ex.embeddings, ex.rows, ex.targets);
      CHECK(RelativeError(r.grad_down[k], o.dy) <= 1e-6);
      CHECK(RelativeError(r.grad_up[k], o.dx) <= 1e-6);
      CHECK(r.record_loss[k] == doctest::Approx(o.loss).epsilon(1e-6));
    }
    // The cloud applied a low-rank update.
    CHECK(RelativeError(sum.middle.lora_b, stack.middle.lora_b) > 0.0);
  }

  TEST_CASE("zero learning rate leaves every parameter alone") {
    Setup st;
    const auto stack = MakeToyStack({3, 8, 6, MiddleKind::kAffine, 2, 9});
    Loopback srv(stack.middle);
    SplitSession s(srv.client(), HelloFor(3, 8, 6, SessionMode::kTuning, true));
    ClientModel model = stack.client;
    StuningRound(st.batch, st.ind, st.perm, model, s, 0.0);
    s.close();
    const auto& sum = srv.finish();
    CHECK(model.encoder.w == stack.client.encoder.w);
    CHECK(model.decoder.w.back() == stack.client.decoder.w.back());
    CHECK(sum.middle.lora_a == stack.middle.lora_a);
    CHECK(sum.middle.lora_b == stack.middle.lora_b);
  }

  TEST_CASE("identity stack: cloud gradient is the incoming gradient") {
    const auto stack = MakeToyStack({3, 8, 6, MiddleKind::kIdentity, 0, 10});
    const Mat e = RandomMat(4, 3, 11);
    const std::vector<std::size_t> rows{0, 1, 2, 3}, targets{1, 2, 3, 4};
    const auto o = MonolithicOracle(stack, e, rows, targets);
    CHECK(RelativeError(o.dx, Quantize(o.dy)) <= 1e-12);
    CHECK(RelativeError(o.y, o.x) == 0.0);
  }

  TEST_CASE("middle gradients against finite differences") {
    for (auto kind : {MiddleKind::kAffine, MiddleKind::kAttention}) {
      const auto stack = MakeToyStack({3, 8, 6, kind, 2, 12});
      const Mat x = RandomMat(5, 8, 13), dy = RandomMat(5, 8, 14);
      const Mat dx = stack.middle.backward(x, dy);
      CHECK(RelativeError(FiniteDifferenceMiddleGradient(stack.middle, x, dy, 1e-5), dx) <= 1e-6);
      const auto f = [&](const Mat& z) { return (stack.middle.forward(z).array() * dy.array()).sum(); };
      for (std::uint64_t k = 0; k < 10; ++k) {
        const Mat dir = RandomMat(5, 8, 100 + k);
        const double fd = DirectionalFiniteDifference(f, x, dir, 1e-5);
        const double an = (dx.array() * dir.array()).sum();
        CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
      }
    }
  }

  TEST_CASE("out-of-order frames end the session") {
    const auto stack = MakeToyStack({3, 4, 6, MiddleKind::kIdentity, 0, 1});
    Loopback srv(stack.middle);
    SendFrame(srv.client(), Frame{FrameType::kEmb, kProtocolVersion, 0, EncodeTensor(Tensor{1, 4, {0, 0, 0, 0}})});
    const Frame reply = RecvFrame(srv.client());
    CHECK(reply.type == FrameType::kError);
    CHECK(DecodeErrorCode(reply.payload) == ProtocolError::kSeq);
    CHECK(*srv.finish().error == ProtocolError::kSeq);
  }

  TEST_CASE("wrong dimensions in HELLO") {
    const auto stack = MakeToyStack({3, 4, 6, MiddleKind::kIdentity, 0, 1});
    Loopback srv(stack.middle);
    CHECK(KindOf([&] { SplitSession(srv.client(), HelloFor(3, 5, 6, SessionMode::kInference, false)); }) ==
          ErrorKind::kProtocol);
    CHECK(*srv.finish().error == ProtocolError::kDims);
  }

  TEST_CASE("tcp session") {
    const auto stack = MakeToyStack({3, 4, 6, MiddleKind::kIdentity, 0, 1});
    MiddleServer server(stack.middle);
    TcpListener listener("127.0.0.1:0");
    REQUIRE(listener.port() != 0);
    std::thread serve([&] { ServeTcp(listener, server); });
    {
      auto conn = TcpConnect("127.0.0.1:" + std::to_string(listener.port()));
      SplitSession s(*conn, HelloFor(3, 4, 6, SessionMode::kInference, false));
      const Mat x = Quantize(RandomMat(2, 4, 5));
      CHECK(RelativeError(s.forward(x), x) == 0.0);
      s.close();
      CHECK(conn->bytes_sent() > 0);
    }
    listener.shutdown();
    serve.join();
    CHECK(ParseAddress("localhost:8080") == std::pair<std::string, std::uint16_t>{"localhost", 8080});
    CHECK_THROWS_AS(ParseAddress("nope"), Error);
  }
}
