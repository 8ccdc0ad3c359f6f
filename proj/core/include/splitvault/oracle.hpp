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
#ifndef SPLITVAULT_ORACLE_HPP_
#define SPLITVAULT_ORACLE_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "splitvault/toy_stack.hpp"

namespace splitvault {

// Fused forward and backward pass of a toy stack written with plain scalar
// loops, independent of the Eigen code paths. Values crossing the split
// boundary are rounded to f32 at the same points as on the wire (X, Y, dY,
// dX), so a correct split exchange agrees with it to double round-off.
struct OracleResult {
  Mat x;  // encoder output as sent
  Mat y;  // middle output as received
  Mat logits;
  double loss = 0.0;
  Mat dlogits;
  Mat dy;  // dL/dY before rounding
  Mat dx;  // dL/dX as returned by the cloud (rounded)
  ClientModel::Grads client;
  Middle::Grads middle;  // low-rank update gradients (affine only)
};

// Targets are optional; without them only the forward fields are set.
OracleResult MonolithicOracle(const ToyStack& stack, const Mat& embeddings,
                              std::span<const std::size_t> target_rows = {},
                              std::span<const std::size_t> targets = {});

// Scalar-loop middle forward.
Mat OracleMiddleForward(const Middle& middle, const Mat& x);

// Central difference (f(x + h v) - f(x - h v)) / 2h.
double DirectionalFiniteDifference(const std::function<double(const Mat&)>& f, const Mat& x,
                                   const Mat& direction, double step);

// Entry-wise central-difference gradient of <dy, middle(x)> with respect to x.
Mat FiniteDifferenceMiddleGradient(const Middle& middle, const Mat& x, const Mat& dy, double step);

// ||a - b|| / max(||b||, 1e-300), Frobenius.
double RelativeError(const Mat& a, const Mat& b);

}  // namespace splitvault

#endif  // SPLITVAULT_ORACLE_HPP_
