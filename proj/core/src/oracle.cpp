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
#include "splitvault/oracle.hpp"

#include <cmath>
#include <limits>

#include "splitvault/error.hpp"

namespace splitvault {
namespace {

// Row-major dense block for the scalar code.
struct Dense {
  std::size_t r = 0, c = 0;
  std::vector<double> v;
  Dense() = default;
  Dense(std::size_t rows, std::size_t cols) : r(rows), c(cols), v(rows * cols, 0.0) {}
  explicit Dense(const Mat& m) : Dense(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) v[i * c + j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double& at(std::size_t i, std::size_t j) { return v[i * c + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * c + j]; }
  Mat mat() const {
    Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = at(i, j);
    return m;
  }
};

Dense Mul(const Dense& a, const Dense& b) {
  Dense out(a.r, b.c);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t k = 0; k < a.c; ++k) {
      const double x = a.at(i, k);
      for (std::size_t j = 0; j < b.c; ++j) out.at(i, j) += x * b.at(k, j);
    }
  return out;
}

Dense Transpose(const Dense& a) {
  Dense out(a.c, a.r);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < a.c; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Dense RowVecDense(const RowVec& b) {
  Dense out(1, static_cast<std::size_t>(b.size()));
  for (std::size_t j = 0; j < out.c; ++j) out.v[j] = b(static_cast<Eigen::Index>(j));
  return out;
}

void AddBias(Dense& a, const Dense& b) {
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < a.c; ++j) a.at(i, j) += b.v[j];
}

Dense ColSum(const Dense& a) {
  Dense out(1, a.c);
  for (std::size_t i = 0; i < a.r; ++i)
    for (std::size_t j = 0; j < a.c; ++j) out.v[j] += a.at(i, j);
  return out;
}

void RoundF32(Dense& a) {
  for (auto& x : a.v) x = static_cast<double>(static_cast<float>(x));
}

Dense Rotate(const Dense& a, double sign) {
  Dense out = a;
  for (std::size_t p = 0; p < a.r; ++p)
    for (std::size_t q = 0; q + 1 < a.c; q += 2) {
      const double ang = static_cast<double>(p) * std::pow(10000.0, -static_cast<double>(q) / static_cast<double>(a.c));
      const double cs = std::cos(ang), sn = sign * std::sin(ang);
      out.at(p, q) = cs * a.at(p, q) - sn * a.at(p, q + 1);
      out.at(p, q + 1) = sn * a.at(p, q) + cs * a.at(p, q + 1);
    }
  return out;
}

Dense AttentionForward(const Middle& mid, const Dense& x) {
  const Dense q = Mul(x, Dense(mid.wq)), k = Mul(x, Dense(mid.wk)), v = Mul(x, Dense(mid.wv));
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.c));
  Dense y = x;
  std::vector<double> w(x.r);
  for (std::size_t i = 0; i < x.r; ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < q.c; ++t) s += q.at(i, t) * k.at(j, t);
      w[j] = s * scale;
      top = std::max(top, w[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j <= i; ++j) z += (w[j] = std::exp(w[j] - top));
    for (std::size_t j = 0; j <= i; ++j)
      for (std::size_t t = 0; t < v.c; ++t) y.at(i, t) += w[j] / z * v.at(j, t);
  }
  return y;
}

Dense MiddleForward(const Middle& mid, const Dense& x) {
  switch (mid.kind) {
    case MiddleKind::kIdentity: return x;
    case MiddleKind::kAffine: {
      Dense w = Dense(mid.m);
      const Dense ab = Mul(Dense(mid.lora_a), Dense(mid.lora_b));
      for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] += ab.v[i];
      Dense y = Mul(x, w);
      AddBias(y, RowVecDense(mid.c));
      return y;
    }
    case MiddleKind::kAttention: return AttentionForward(mid, x);
  }
  return x;
}

}  // namespace

Mat OracleMiddleForward(const Middle& middle, const Mat& x) { return MiddleForward(middle, Dense(x)).mat(); }

double DirectionalFiniteDifference(const std::function<double(const Mat&)>& f, const Mat& x,
                                   const Mat& dir, double step) {
  return (f(x + step * dir) - f(x - step * dir)) / (2.0 * step);
}

Mat FiniteDifferenceMiddleGradient(const Middle& middle, const Mat& x, const Mat& dy, double step) {
  auto f = [&](const Mat& z) { return (OracleMiddleForward(middle, z).array() * dy.array()).sum(); };
  Mat g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Mat e = Mat::Zero(x.rows(), x.cols());
      e(i, j) = 1.0;
      g(i, j) = DirectionalFiniteDifference(f, x, e, step);
    }
  return g;
}

double RelativeError(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

OracleResult MonolithicOracle(const ToyStack& s, const Mat& embeddings,
                              std::span<const std::size_t> target_rows,
                              std::span<const std::size_t> targets) {
  OracleResult out;
  const Dense e(embeddings);
  Dense h = Mul(e, Dense(s.client.encoder.w));
  AddBias(h, RowVecDense(s.client.encoder.b));
  Dense x = Rotate(h, 1.0);
  RoundF32(x);
  Dense y = MiddleForward(s.middle, x);
  RoundF32(y);
  std::vector<Dense> acts{y};
  for (std::size_t l = 0; l < s.client.decoder.w.size(); ++l) {
    Dense z = Mul(acts.back(), Dense(s.client.decoder.w[l]));
    AddBias(z, RowVecDense(s.client.decoder.b[l]));
    acts.push_back(std::move(z));
  }
  const Dense& logits = acts.back();
  out.x = x.mat();
  out.y = y.mat();
  out.logits = logits.mat();
  if (targets.empty()) return out;
  if (targets.size() != target_rows.size()) throw Error(ErrorKind::kArgument, "target rows and targets differ in length");

  Dense dl(logits.r, logits.c);
  const double inv = 1.0 / static_cast<double>(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const std::size_t r = target_rows[k], g = targets[k];
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < logits.c; ++j) top = std::max(top, logits.at(r, j));
    double z = 0.0;
    for (std::size_t j = 0; j < logits.c; ++j) z += std::exp(logits.at(r, j) - top);
    out.loss += (std::log(z) + top - logits.at(r, g)) * inv;
    for (std::size_t j = 0; j < logits.c; ++j) dl.at(r, j) += std::exp(logits.at(r, j) - top) / z * inv;
    dl.at(r, g) -= inv;
  }
  out.dlogits = dl.mat();

  Dense g = dl;
  const std::size_t layers = s.client.decoder.w.size();
  out.client.decoder.w.resize(layers);
  out.client.decoder.b.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    out.client.decoder.w[l] = Mul(Transpose(acts[l]), g).mat();
    out.client.decoder.b[l] = ColSum(g).mat();
    g = Mul(g, Transpose(Dense(s.client.decoder.w[l])));
  }
  out.dy = g.mat();
  Dense dy = g;
  RoundF32(dy);

  Dense dx;
  switch (s.middle.kind) {
    case MiddleKind::kIdentity: dx = dy; break;
    case MiddleKind::kAffine: {
      Dense w = Dense(s.middle.m);
      const Dense ab = Mul(Dense(s.middle.lora_a), Dense(s.middle.lora_b));
      for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] += ab.v[i];
      dx = Mul(dy, Transpose(w));
      const Dense xt_dy = Mul(Transpose(x), dy);
      out.middle.lora_a = Mul(xt_dy, Transpose(Dense(s.middle.lora_b))).mat();
      out.middle.lora_b = Mul(Transpose(Dense(s.middle.lora_a)), xt_dy).mat();
      break;
    }
    case MiddleKind::kAttention:
      // No closed form here on purpose; the analytic attention backward is
      // what this checks.
      dx = Dense(FiniteDifferenceMiddleGradient(s.middle, x.mat(), dy.mat(), 1e-4));
      break;
  }
  RoundF32(dx);
  out.dx = dx.mat();
  const Dense dh = Rotate(dx, -1.0);
  out.client.encoder.w = Mul(Transpose(e), dh).mat();
  out.client.encoder.b = ColSum(dh).mat();
  return out;
}

}  // namespace splitvault
