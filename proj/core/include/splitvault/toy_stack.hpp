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
#ifndef SPLITVAULT_TOY_STACK_HPP_
#define SPLITVAULT_TOY_STACK_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splitvault/wire.hpp"

namespace splitvault {

using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

// Rows are positions. Rotates feature pairs (2q, 2q+1) of row p by angle
// p * 10000^(-2q/d); an odd last feature is left alone. Orthogonal, so the
// inverse is the rotation by the negative angle.
Mat RotatePositions(const Mat& x, bool inverse = false);

// Round-trip through f32, as on the wire.
Mat Quantize(const Mat& x);
Tensor ToTensor(const Mat& x);
Mat FromTensor(const Tensor& t);

// Client-side encoder: X = rotate(E W + b).
struct Encoder {
  Mat w;  // m x d
  RowVec b;

  Mat forward(const Mat& e) const;
  struct Grads {
    Mat w;
    RowVec b;
  };
  Grads backward(const Mat& e, const Mat& dx) const;
};

enum class MiddleKind : std::uint8_t { kIdentity = 0, kAffine = 1, kAttention = 2 };
const char* ToString(MiddleKind kind);
MiddleKind ParseMiddleKind(const std::string& name);

// Cloud-side block.
//   identity   Y = X
//   affine     Y = X (M + A B) + c        (A d x r, B r x d: the low-rank update)
//   attention  Y = X + softmax(mask(X Wq (X Wk)^T / sqrt(d))) X Wv, causal
struct Middle {
  MiddleKind kind = MiddleKind::kIdentity;
  std::size_t d = 0;
  Mat m, lora_a, lora_b;
  RowVec c;
  Mat wq, wk, wv;

  struct Grads {
    Mat lora_a, lora_b;
  };

  Mat forward(const Mat& x) const;
  // dL/dX; when grads is given (affine only) also dL/dA and dL/dB.
  Mat backward(const Mat& x, const Mat& dy, Grads* grads = nullptr) const;
  void apply(const Grads& g, double lr);
  std::size_t lora_rank() const { return static_cast<std::size_t>(lora_a.cols()); }
};

// Client-side decoder: four affine layers d -> d -> d -> d -> |V|.
struct Decoder {
  std::vector<Mat> w;
  std::vector<RowVec> b;

  Mat forward(const Mat& y) const;
  struct Grads {
    std::vector<Mat> w;
    std::vector<RowVec> b;
  };
  // Returns dL/dY.
  Mat backward(const Mat& y, const Mat& dlogits, Grads& grads) const;
};

struct ClientModel {
  Encoder encoder;
  Decoder decoder;

  struct Grads {
    Encoder::Grads encoder;
    Decoder::Grads decoder;
  };
  Grads zero_grads() const;
  void apply(const Grads& g, double lr);
};

struct ToyStackConfig {
  std::size_t m = 3;
  std::size_t d = 8;
  std::size_t vocab_size = 6;
  MiddleKind middle = MiddleKind::kAffine;
  std::size_t lora_rank = 2;
  std::uint64_t seed = 0;
};

struct ToyStack {
  ClientModel client;
  Middle middle;
};

// Weights uniform in +-1/sqrt(fan_in) from SeqRng(seed).
ToyStack MakeToyStack(const ToyStackConfig& config);

// Mean cross-entropy of logit rows against target indices; rows listed in
// target_rows only. Fills dlogits (same shape as logits) when given.
double CrossEntropy(const Mat& logits, std::span<const std::size_t> target_rows,
                    std::span<const std::size_t> targets, Mat* dlogits);

}  // namespace splitvault

#endif  // SPLITVAULT_TOY_STACK_HPP_
