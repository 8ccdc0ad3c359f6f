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
#ifndef SPLITVAULT_SPLIT_CLIENT_HPP_
#define SPLITVAULT_SPLIT_CLIENT_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "splitvault/corpus.hpp"
#include "splitvault/indvocab.hpp"
#include "splitvault/ltokenizer.hpp"
#include "splitvault/toy_stack.hpp"
#include "splitvault/transport.hpp"

namespace splitvault {

// Client end of one session. Any ERROR frame from the cloud is raised as
// kProtocol carrying the error code name.
class SplitSession {
 public:
  SplitSession(Transport& transport, const Hello& hello);

  std::uint64_t id() const noexcept { return session_; }
  const Hello& hello() const noexcept { return hello_; }

  Mat forward(const Mat& x);       // EMB -> ENRICHED
  Mat backward(const Mat& dy);     // GRAD_DOWN -> GRAD_UP
  ParamAck commit(double learning_rate, std::uint32_t count);  // PARAM_ACK both ways
  void close();                    // BYE

  Transport& transport() noexcept { return t_; }

 private:
  Frame exchange(FrameType type, std::vector<std::uint8_t> payload, FrameType expect);

  Transport& t_;
  Hello hello_;
  std::uint64_t session_ = 0;
  bool open_ = true;
};

struct GenerationConfig {
  double temperature = 0.25;  // 0 means argmax
  std::size_t max_tokens = 16;
  std::uint64_t seed = 0;
};

// Rows of the randomized vocabulary for original token indices.
Mat EmbedTokens(const Vocabulary& randomized, std::span<const std::size_t> original);

// Index of the logit to emit; argmax (lowest index on ties) when h == 0,
// otherwise softmax(logits / h) sampled with rng.
std::size_t SampleLogits(const Eigen::RowVectorXd& logits, double temperature, SeqRng& rng);

// Autoregressive generation; the full prefix is re-sent each step. Returns
// local indices. step_logits, when given, receives the last-row logits of
// every step.
std::vector<std::size_t> ClientGenerate(std::span<const std::size_t> prompt, const IndVocab& ind,
                                        const TokenPermutation& perm, const ClientModel& model,
                                        SplitSession& session, const GenerationConfig& cfg,
                                        std::vector<Eigen::RowVectorXd>* step_logits = nullptr);

// Inputs and local-index targets for one record: rows 0..n-2 of prompt+code
// predict the next token; only code targets count.
struct TuningExample {
  Mat embeddings;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> targets;  // local indices
};
TuningExample MakeTuningExample(const CorpusRecord& record, const IndVocab& ind,
                                const TokenPermutation& perm);

struct StuningResult {
  double loss = 0.0;                // mean over records, before the update
  std::vector<double> record_loss;
  std::vector<Mat> grad_down;       // dL/dY sent per record
  std::vector<Mat> grad_up;         // dL/dX received per record
  ClientModel::Grads grads;         // batch-averaged client gradients
};

// One full-batch round. Throws kNonFiniteLoss.
StuningResult StuningRound(const std::vector<CorpusRecord>& batch, const IndVocab& ind,
                           const TokenPermutation& perm, ClientModel& model,
                           SplitSession& session, double learning_rate);

}  // namespace splitvault

#endif  // SPLITVAULT_SPLIT_CLIENT_HPP_
