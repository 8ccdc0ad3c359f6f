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
#include "splitvault/split_client.hpp"

#include <cmath>

#include <fmt/format.h>

#include "splitvault/error.hpp"
#include "splitvault/rng.hpp"

namespace splitvault {

SplitSession::SplitSession(Transport& transport, const Hello& hello) : t_(transport), hello_(hello) {
  const Frame ack = exchange(FrameType::kHello, EncodeHello(hello), FrameType::kHelloAck);
  session_ = ack.session;
}

Frame SplitSession::exchange(FrameType type, std::vector<std::uint8_t> payload, FrameType expect) {
  if (!open_) throw Error(ErrorKind::kProtocol, "session is closed");
  SendFrame(t_, Frame{type, kProtocolVersion, session_, std::move(payload)});
  Frame f = RecvFrame(t_);
  if (f.type == FrameType::kError) {
    open_ = false;
    throw Error(ErrorKind::kProtocol,
                fmt::format("cloud answered {} with ERROR({})", ToString(type), ToString(DecodeErrorCode(f.payload))));
  }
  if (f.type != expect) {
    throw Error(ErrorKind::kProtocol, fmt::format("expected {}, got {}", ToString(expect), ToString(f.type)));
  }
  ValidatePayload(f.type, f.payload);
  return f;
}

Mat SplitSession::forward(const Mat& x) {
  if (static_cast<std::uint32_t>(x.cols()) != hello_.d) {
    throw Error(ErrorKind::kDimensionMismatch, fmt::format("EMB has d={}, session d={}", x.cols(), hello_.d));
  }
  const Tensor y = DecodeTensor(exchange(FrameType::kEmb, EncodeTensor(ToTensor(x)), FrameType::kEnriched).payload);
  if (y.n != x.rows() || y.d != hello_.d) throw Error(ErrorKind::kDimensionMismatch, "ENRICHED shape differs from EMB");
  return FromTensor(y);
}

Mat SplitSession::backward(const Mat& dy) {
  const Tensor dx = DecodeTensor(exchange(FrameType::kGradDown, EncodeTensor(ToTensor(dy)), FrameType::kGradUp).payload);
  if (dx.n != dy.rows() || dx.d != hello_.d) throw Error(ErrorKind::kDimensionMismatch, "GRAD_UP shape differs");
  return FromTensor(dx);
}

ParamAck SplitSession::commit(double lr, std::uint32_t count) {
  return DecodeParamAck(exchange(FrameType::kParamAck, EncodeParamAck({lr, count}), FrameType::kParamAck).payload);
}

void SplitSession::close() {
  if (!open_) return;
  exchange(FrameType::kBye, {}, FrameType::kBye);
  open_ = false;
}

Mat EmbedTokens(const Vocabulary& v, std::span<const std::size_t> original) {
  Mat e(static_cast<Eigen::Index>(original.size()), static_cast<Eigen::Index>(v.dim()));
  for (std::size_t r = 0; r < original.size(); ++r) {
    const auto row = v.row(original[r]);
    for (std::size_t i = 0; i < row.size(); ++i) e(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = row[i];
  }
  return e;
}

std::size_t SampleLogits(const Eigen::RowVectorXd& logits, double h, SeqRng& rng) {
  if (!(h >= 0.0)) throw Error(ErrorKind::kArgument, "temperature must be >= 0");
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < logits.size(); ++j) {
    if (logits(j) > logits(best)) best = j;
  }
  if (h == 0.0) return static_cast<std::size_t>(best);
  const Eigen::RowVectorXd p = ((logits.array() - logits(best)) / h).exp().matrix();
  const double u = rng.uniform() * p.sum();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    acc += p(j);
    if (u < acc) return static_cast<std::size_t>(j);
  }
  return static_cast<std::size_t>(best);
}

std::vector<std::size_t> ClientGenerate(std::span<const std::size_t> prompt, const IndVocab& ind,
                                        const TokenPermutation& perm, const ClientModel& model,
                                        SplitSession& session, const GenerationConfig& cfg,
                                        std::vector<Eigen::RowVectorXd>* step_logits) {
  if (prompt.empty()) throw Error(ErrorKind::kEmptySequence, "generation needs a prompt");
  if (perm.size != ind.randomized.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "permutation and vocabulary sizes differ");
  }
  std::vector<std::size_t> tokens(prompt.begin(), prompt.end());
  std::vector<std::size_t> out;
  SeqRng rng(cfg.seed);
  for (std::size_t step = 0; step < cfg.max_tokens; ++step) {
    const Mat x = model.encoder.forward(EmbedTokens(ind.randomized, tokens));
    const Mat logits = model.decoder.forward(session.forward(x));
    const Eigen::RowVectorXd last = logits.row(logits.rows() - 1);
    if (step_logits) step_logits->push_back(last);
    const std::size_t local = SampleLogits(last, cfg.temperature, rng);
    out.push_back(local);
    tokens.push_back(perm.inverse.at(local));
  }
  return out;
}

TuningExample MakeTuningExample(const CorpusRecord& record, const IndVocab& ind, const TokenPermutation& perm) {
  if (record.code.empty()) throw Error(ErrorKind::kEmptySequence, "tuning record has no code tokens");
  std::vector<std::size_t> seq = record.prompt;
  seq.insert(seq.end(), record.code.begin(), record.code.end());
  TuningExample ex;
  ex.embeddings = EmbedTokens(ind.randomized, std::span(seq).first(seq.size() - 1));
  for (std::size_t j = record.prompt.size() - 1; j + 1 < seq.size(); ++j) {
    ex.rows.push_back(j);
    ex.targets.push_back(perm.forward.at(seq[j + 1]));
  }
  return ex;
}

StuningResult StuningRound(const std::vector<CorpusRecord>& batch, const IndVocab& ind,
                           const TokenPermutation& perm, ClientModel& model, SplitSession& session,
                           double lr) {
  if (batch.empty()) throw Error(ErrorKind::kEmptyCorpus, "tuning batch is empty");
  StuningResult res;
  res.grads = model.zero_grads();
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& rec : batch) {
    const TuningExample ex = MakeTuningExample(rec, ind, perm);
    const Mat x = model.encoder.forward(ex.embeddings);
    const Mat y = session.forward(x);
    const Mat logits = model.decoder.forward(y);
    Mat dlogits;
    const double loss = CrossEntropy(logits, ex.rows, ex.targets, &dlogits);
    if (!std::isfinite(loss)) throw Error(ErrorKind::kNonFiniteLoss, fmt::format("loss is {}", loss));
    Decoder::Grads dg;
    const Mat dy = model.decoder.backward(y, dlogits, dg);
    const Mat dx = session.backward(dy);
    const Encoder::Grads eg = model.encoder.backward(ex.embeddings, dx);
    res.grads.encoder.w += inv * eg.w;
    res.grads.encoder.b += inv * eg.b;
    for (std::size_t l = 0; l < dg.w.size(); ++l) {
      res.grads.decoder.w[l] += inv * dg.w[l];
      res.grads.decoder.b[l] += inv * dg.b[l];
    }
    res.record_loss.push_back(loss);
    res.loss += inv * loss;
    res.grad_down.push_back(dy);
    res.grad_up.push_back(dx);
  }
  model.apply(res.grads, lr);
  session.commit(lr, static_cast<std::uint32_t>(batch.size()));
  return res;
}

}  // namespace splitvault
