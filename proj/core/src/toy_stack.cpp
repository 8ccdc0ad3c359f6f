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
#include "splitvault/toy_stack.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "splitvault/error.hpp"
#include "splitvault/rng.hpp"

namespace splitvault {

Mat RotatePositions(const Mat& x, bool inverse) {
  Mat out = x;
  const auto d = x.cols();
  for (Eigen::Index p = 0; p < x.rows(); ++p) {
    for (Eigen::Index q = 0; q + 1 < d; q += 2) {
      const double angle = static_cast<double>(p) * std::pow(10000.0, -static_cast<double>(q) / static_cast<double>(d));
      const double c = std::cos(angle);
      const double s = inverse ? -std::sin(angle) : std::sin(angle);
      out(p, q) = c * x(p, q) - s * x(p, q + 1);
      out(p, q + 1) = s * x(p, q) + c * x(p, q + 1);
    }
  }
  return out;
}

Mat Quantize(const Mat& x) { return x.cast<float>().cast<double>(); }

Tensor ToTensor(const Mat& x) {
  Tensor t;
  t.n = static_cast<std::uint32_t>(x.rows());
  t.d = static_cast<std::uint32_t>(x.cols());
  t.values.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) t.values.push_back(static_cast<float>(x(i, j)));
  }
  return t;
}

Mat FromTensor(const Tensor& t) {
  Mat x(t.n, t.d);
  for (std::uint32_t i = 0; i < t.n; ++i) {
    for (std::uint32_t j = 0; j < t.d; ++j) x(i, j) = t.values[static_cast<std::size_t>(i) * t.d + j];
  }
  return x;
}

Mat Encoder::forward(const Mat& e) const {
  if (e.cols() != w.rows()) {
    throw Error(ErrorKind::kDimensionMismatch, fmt::format("encoder expects m={}, got {}", w.rows(), e.cols()));
  }
  Mat h = e * w;
  h.rowwise() += b;
  return RotatePositions(h);
}

Encoder::Grads Encoder::backward(const Mat& e, const Mat& dx) const {
  const Mat dh = RotatePositions(dx, /*inverse=*/true);
  return Grads{e.transpose() * dh, dh.colwise().sum()};
}

const char* ToString(MiddleKind kind) {
  switch (kind) {
    case MiddleKind::kIdentity: return "identity";
    case MiddleKind::kAffine: return "affine";
    case MiddleKind::kAttention: return "attention";
  }
  return "?";
}

MiddleKind ParseMiddleKind(const std::string& name) {
  if (name == "identity") return MiddleKind::kIdentity;
  if (name == "affine") return MiddleKind::kAffine;
  if (name == "attention") return MiddleKind::kAttention;
  throw Error(ErrorKind::kArgument, fmt::format("unknown middle model '{}' (identity, affine, attention)", name));
}

namespace {

// Row softmax of causal scores; entries above the diagonal are zero.
Mat CausalSoftmax(const Mat& scores) {
  Mat p = Mat::Zero(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j <= i; ++j) top = std::max(top, scores(i, j));
    double z = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) z += (p(i, j) = std::exp(scores(i, j) - top));
    for (Eigen::Index j = 0; j <= i; ++j) p(i, j) /= z;
  }
  return p;
}

}  // namespace

Mat Middle::forward(const Mat& x) const {
  if (static_cast<std::size_t>(x.cols()) != d) {
    throw Error(ErrorKind::kDimensionMismatch, fmt::format("middle expects d={}, got {}", d, x.cols()));
  }
  switch (kind) {
    case MiddleKind::kIdentity: return x;
    case MiddleKind::kAffine: {
      Mat y = x * (m + lora_a * lora_b);
      y.rowwise() += c;
      return y;
    }
    case MiddleKind::kAttention: {
      const double scale = 1.0 / std::sqrt(static_cast<double>(d));
      const Mat q = x * wq, k = x * wk, v = x * wv;
      return x + CausalSoftmax(q * k.transpose() * scale) * v;
    }
  }
  return x;
}

Mat Middle::backward(const Mat& x, const Mat& dy, Grads* grads) const {
  if (x.rows() != dy.rows() || x.cols() != dy.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "middle gradient shape differs from its input");
  }
  switch (kind) {
    case MiddleKind::kIdentity: return dy;
    case MiddleKind::kAffine: {
      if (grads) {
        const Mat xt_dy = x.transpose() * dy;
        grads->lora_a = xt_dy * lora_b.transpose();
        grads->lora_b = lora_a.transpose() * xt_dy;
      }
      return dy * (m + lora_a * lora_b).transpose();
    }
    case MiddleKind::kAttention: {
      const double scale = 1.0 / std::sqrt(static_cast<double>(d));
      const Mat q = x * wq, k = x * wk, v = x * wv;
      const Mat p = CausalSoftmax(q * k.transpose() * scale);
      const Mat dp = dy * v.transpose();
      const Mat dv = p.transpose() * dy;
      Mat ds = Mat::Zero(p.rows(), p.cols());
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        double dot = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) dot += dp(i, j) * p(i, j);
        for (Eigen::Index j = 0; j <= i; ++j) ds(i, j) = p(i, j) * (dp(i, j) - dot);
      }
      ds *= scale;
      const Mat dq = ds * k;
      const Mat dk = ds.transpose() * q;
      return dy + dq * wq.transpose() + dk * wk.transpose() + dv * wv.transpose();
    }
  }
  return dy;
}

void Middle::apply(const Grads& g, double lr) {
  if (kind != MiddleKind::kAffine || lora_a.size() == 0) return;
  lora_a -= lr * g.lora_a;
  lora_b -= lr * g.lora_b;
}

Mat Decoder::forward(const Mat& y) const {
  Mat h = y;
  for (std::size_t l = 0; l < w.size(); ++l) {
    h = h * w[l];
    h.rowwise() += b[l];
  }
  return h;
}

Mat Decoder::backward(const Mat& y, const Mat& dlogits, Grads& grads) const {
  std::vector<Mat> inputs{y};
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    Mat h = inputs.back() * w[l];
    h.rowwise() += b[l];
    inputs.push_back(std::move(h));
  }
  grads.w.resize(w.size());
  grads.b.resize(b.size());
  Mat g = dlogits;
  for (std::size_t l = w.size(); l-- > 0;) {
    grads.w[l] = inputs[l].transpose() * g;
    grads.b[l] = g.colwise().sum();
    g = g * w[l].transpose();
  }
  return g;
}

ClientModel::Grads ClientModel::zero_grads() const {
  Grads g;
  g.encoder.w = Mat::Zero(encoder.w.rows(), encoder.w.cols());
  g.encoder.b = RowVec::Zero(encoder.b.size());
  for (std::size_t l = 0; l < decoder.w.size(); ++l) {
    g.decoder.w.push_back(Mat::Zero(decoder.w[l].rows(), decoder.w[l].cols()));
    g.decoder.b.push_back(RowVec::Zero(decoder.b[l].size()));
  }
  return g;
}

void ClientModel::apply(const Grads& g, double lr) {
  encoder.w -= lr * g.encoder.w;
  encoder.b -= lr * g.encoder.b;
  for (std::size_t l = 0; l < decoder.w.size(); ++l) {
    decoder.w[l] -= lr * g.decoder.w[l];
    decoder.b[l] -= lr * g.decoder.b[l];
  }
}

ToyStack MakeToyStack(const ToyStackConfig& cfg) {
  if (cfg.m == 0 || cfg.d == 0 || cfg.vocab_size < 2) {
    throw Error(ErrorKind::kArgument, "toy stack needs m >= 1, d >= 1, |V| >= 2");
  }
  SeqRng rng(cfg.seed);
  auto init = [&](std::size_t rows, std::size_t cols) {
    const double s = 1.0 / std::sqrt(static_cast<double>(rows));
    Mat x(rows, cols);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(-s, s);
    }
    return x;
  };
  auto bias = [&](std::size_t cols) {
    RowVec v(cols);
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.uniform(-0.1, 0.1);
    return v;
  };
  ToyStack s;
  s.client.encoder.w = init(cfg.m, cfg.d);
  s.client.encoder.b = bias(cfg.d);
  s.middle.kind = cfg.middle;
  s.middle.d = cfg.d;
  if (cfg.middle == MiddleKind::kAffine) {
    s.middle.m = Mat::Identity(cfg.d, cfg.d) + init(cfg.d, cfg.d);
    s.middle.c = bias(cfg.d);
    s.middle.lora_a = init(cfg.d, cfg.lora_rank);
    s.middle.lora_b = init(std::max<std::size_t>(cfg.lora_rank, 1), cfg.d).topRows(cfg.lora_rank);
  } else if (cfg.middle == MiddleKind::kAttention) {
    s.middle.wq = init(cfg.d, cfg.d);
    s.middle.wk = init(cfg.d, cfg.d);
    s.middle.wv = init(cfg.d, cfg.d);
  }
  for (std::size_t l = 0; l < 4; ++l) {
    const std::size_t out = l == 3 ? cfg.vocab_size : cfg.d;
    s.client.decoder.w.push_back(init(cfg.d, out));
    s.client.decoder.b.push_back(bias(out));
  }
  return s;
}

double CrossEntropy(const Mat& logits, std::span<const std::size_t> rows,
                    std::span<const std::size_t> targets, Mat* dlogits) {
  if (rows.size() != targets.size() || rows.empty()) {
    throw Error(ErrorKind::kArgument, "cross-entropy needs matching, non-empty row and target lists");
  }
  if (dlogits) *dlogits = Mat::Zero(logits.rows(), logits.cols());
  const double inv = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(rows[k]);
    const auto g = static_cast<Eigen::Index>(targets[k]);
    if (r >= logits.rows() || g >= logits.cols()) throw Error(ErrorKind::kIndex, "cross-entropy index out of range");
    const double top = logits.row(r).maxCoeff();
    const Eigen::RowVectorXd ex = (logits.row(r).array() - top).exp().matrix();
    const double z = ex.sum();
    loss += (std::log(z) + top - logits(r, g)) * inv;
    if (dlogits) {
      dlogits->row(r) += ex / z * inv;
      (*dlogits)(r, g) -= inv;
    }
  }
  return loss;
}

}  // namespace splitvault
