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
#include "splitvault/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "splitvault/error.hpp"
#include "splitvault/rng.hpp"

namespace splitvault {
namespace {

double Mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double PerturbationStats::mean_l1() const { return Mean(l1_distances); }
double PerturbationStats::mean_bigram_cos_change() const { return Mean(bigram_cos_changes); }
double PerturbationStats::mean_pairwise_cos_change() const { return Mean(pairwise_cos_changes); }

double Cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

PerturbationStats MeasurePerturbation(const Vocabulary& original, const Vocabulary& perturbed,
                                      const std::vector<std::vector<std::size_t>>& prompts,
                                      std::size_t pair_samples, std::uint64_t seed) {
  if (original.size() != perturbed.size() || original.dim() != perturbed.dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                fmt::format("original is {}x{}, perturbed is {}x{}", original.size(), original.dim(),
                            perturbed.size(), perturbed.dim()));
  }
  PerturbationStats s;
  std::size_t tokens = 0, moved = 0, strings = 0;
  for (const auto& x : prompts) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto t = x[j];
      if (t >= original.size()) throw Error(ErrorKind::kIndex, fmt::format("token index {} out of range", t));
      const auto a = original.row(t);
      const auto b = perturbed.row(t);
      double l1 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) l1 += std::abs(static_cast<double>(a[i]) - b[i]);
      s.l1_distances.push_back(l1);
      ++tokens;
      if (l1 > 0.0) ++moved;
      if (original.token(t) != perturbed.token(t)) ++strings;
      if (j > 0) {
        const auto p = x[j - 1];
        s.bigram_cos_changes.push_back(
            std::abs(Cosine(perturbed.row(p), b) - Cosine(original.row(p), a)));
      }
    }
  }
  if (tokens) {
    s.percent_tokens_changed = static_cast<double>(moved) / static_cast<double>(tokens);
    s.percent_strings_changed = static_cast<double>(strings) / static_cast<double>(tokens);
  }
  SeqRng rng(seed);
  for (std::size_t k = 0; k < pair_samples; ++k) {
    const auto u = rng.below(original.size());
    const auto v = rng.below(original.size());
    s.pairwise_cos_changes.push_back(std::abs(Cosine(perturbed.row(u), perturbed.row(v)) -
                                              Cosine(original.row(u), original.row(v))));
  }
  return s;
}

Vocabulary LaplaceNoised(const Vocabulary& original, double scale, std::uint64_t seed) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::kArgument, fmt::format("Laplace scale must be > 0 (got {})", scale));
  }
  SeqRng rng(seed);
  std::vector<float> out(original.matrix().begin(), original.matrix().end());
  for (auto& v : out) {
    double u;
    do {
      u = rng.uniform() - 0.5;
    } while (u == -0.5);
    const double noise = -scale * std::copysign(1.0, u) * std::log(1.0 - 2.0 * std::abs(u));
    v = static_cast<float>(static_cast<double>(v) + noise);
  }
  return original.with_embeddings(std::move(out));
}

PerturbationReport PerturbationAnalysis(const Vocabulary& original, const Vocabulary& randomized,
                                        const std::vector<std::vector<std::size_t>>& prompts,
                                        std::size_t pair_samples, std::uint64_t seed,
                                        std::optional<double> laplace_scale) {
  if (original.tokens() != randomized.tokens()) {
    throw Error(ErrorKind::kDimensionMismatch, "randomized vocabulary has different tokens");
  }
  PerturbationReport r;
  r.randomized = MeasurePerturbation(original, randomized, prompts, pair_samples, seed);
  if (laplace_scale) {
    r.laplace_scale = *laplace_scale;
    r.laplace = MeasurePerturbation(original, LaplaceNoised(original, *laplace_scale, DeriveSeed(seed, 1)),
                                    prompts, pair_samples, seed);
  }
  return r;
}

}  // namespace splitvault
