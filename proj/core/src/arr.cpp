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
#include "splitvault/arr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "splitvault/error.hpp"

namespace splitvault {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAddExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::uint32_t Bits(float v) { return std::bit_cast<std::uint32_t>(v); }

double FeasibilitySlack(double min_eps) {
  return 1e-12 * std::max(1.0, std::abs(min_eps));
}

}  // namespace

const char* ToString(DenominatorPolicy policy) {
  switch (policy) {
    case DenominatorPolicy::kPaperVerbatim: return "paper";
    case DenominatorPolicy::kExcludeSelf: return "exclude-self";
  }
  return "?";
}

DenominatorPolicy ParseDenominatorPolicy(const std::string& name) {
  if (name == "paper" || name == "paper-verbatim" || name == "PAPER_VERBATIM") {
    return DenominatorPolicy::kPaperVerbatim;
  }
  if (name == "exclude-self" || name == "EXCLUDE_SELF") {
    return DenominatorPolicy::kExcludeSelf;
  }
  throw Error(ErrorKind::kArgument,
              fmt::format("unknown denominator policy '{}' (use paper or "
                          "exclude-self)", name));
}

double ComposeBudget(std::span<const double> per_feature) {
  // Neumaier-compensated sum.
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < per_feature.size(); ++i) {
    const double x = per_feature[i];
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw Error(ErrorKind::kArgument,
                  fmt::format("per-feature budget {} is {} (must be finite and "
                              ">= 0)", i, x));
    }
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

BudgetPlan BudgetPlan::Uniform(double total_epsilon, std::size_t dim) {
  if (!(total_epsilon >= 0.0) || !std::isfinite(total_epsilon)) {
    throw Error(ErrorKind::kArgument, "total epsilon must be finite and >= 0");
  }
  if (dim == 0) throw Error(ErrorKind::kArgument, "dim must be >= 1");
  BudgetPlan plan;
  plan.total_epsilon = total_epsilon;
  plan.per_feature.assign(dim, total_epsilon / static_cast<double>(dim));
  return plan;
}

BudgetPlan BudgetPlan::FromSplit(std::vector<double> per_feature) {
  BudgetPlan plan;
  plan.total_epsilon = ComposeBudget(per_feature);
  plan.per_feature = std::move(per_feature);
  return plan;
}

void BudgetPlan::Validate(std::size_t dim) const {
  if (per_feature.size() != dim) {
    throw Error(ErrorKind::kArgument,
                fmt::format("budget plan has {} per-feature entries for m={}",
                            per_feature.size(), dim));
  }
  const double sum = ComposeBudget(per_feature);
  if (std::abs(sum - total_epsilon) > 1e-12 * std::max(1.0, std::abs(total_epsilon))) {
    throw Error(ErrorKind::kArgument,
                fmt::format("per-feature budgets sum to {:.17g}, total is {:.17g}",
                            sum, total_epsilon));
  }
}

ColumnModel::ColumnModel(std::span<const float> column, std::size_t dim,
                         double eps_i, DenominatorPolicy policy)
    : values_(column.begin(), column.end()),
      inv_m_(1.0 / static_cast<double>(dim)),
      eps_(eps_i),
      policy_(policy) {
  const std::size_t n = values_.size();
  if (n < 2) throw Error(ErrorKind::kArgument, "column needs at least 2 tokens");
  if (dim == 0) throw Error(ErrorKind::kArgument, "dim must be >= 1");
  if (!(eps_i >= 0.0) || !std::isfinite(eps_i)) {
    throw Error(ErrorKind::kArgument,
                fmt::format("per-feature epsilon {} must be finite and >= 0", eps_i));
  }
  log_psi_ = std::log(static_cast<double>(n - 1));

  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return values_[a] < values_[b];
  });
  pos_.resize(n);
  sorted_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    pos_[order_[j]] = j;
    sorted_[j] = static_cast<double>(values_[order_[j]]);
  }

  prefix_.resize(n);
  double acc = kNegInf;
  for (std::size_t j = 0; j < n; ++j) {
    acc = LogAddExp(acc, sorted_[j] * inv_m_);
    prefix_[j] = acc;
  }
  suffix_.assign(n + 1, kNegInf);
  for (std::size_t j = n; j-- > 0;) {
    suffix_[j] = LogAddExp(suffix_[j + 1], -sorted_[j] * inv_m_);
  }

  dmin_.resize(n);
  dmax_.resize(n);
  log_z_excl_.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t j = pos_[t];
    const double v = sorted_[j];
    const std::size_t lo = j == 0 ? 1 : 0;
    const std::size_t hi = j == n - 1 ? n - 2 : n - 1;
    dmax_[t] = std::max(std::abs(v - sorted_[lo]), std::abs(sorted_[hi] - v));
    double dmin = std::numeric_limits<double>::infinity();
    if (j > 0) dmin = std::min(dmin, v - sorted_[j - 1]);
    if (j + 1 < n) dmin = std::min(dmin, sorted_[j + 1] - v);
    dmin_[t] = dmin;
    const double left = j > 0 ? prefix_[j - 1] - v * inv_m_ : kNegInf;
    const double right = j + 1 < n ? suffix_[j + 1] + v * inv_m_ : kNegInf;
    log_z_excl_[t] = LogAddExp(left, right);
  }

  std::vector<std::uint32_t> bits(n);
  for (std::size_t t = 0; t < n; ++t) bits[t] = Bits(values_[t]);
  std::sort(bits.begin(), bits.end());
  for (std::size_t k = 0; k < n;) {
    std::size_t e = k;
    while (e < n && bits[e] == bits[k]) ++e;
    multiplicity_.emplace_back(bits[k], e - k);
    k = e;
  }
}

double ColumnModel::min_feasible_epsilon(std::size_t t) const {
  return (dmax_.at(t) - dmin_.at(t)) * inv_m_;
}

bool ColumnModel::feasible(std::size_t t) const {
  const double need = min_feasible_epsilon(t);
  return eps_ + FeasibilitySlack(need) >= need;
}

void ColumnModel::require_feasible(std::size_t t) const {
  if (t >= size()) {
    throw Error(ErrorKind::kIndex, fmt::format("token index {} out of range", t));
  }
  if (!feasible(t)) {
    throw InfeasibleBudgetError({InfeasibleCell{t, 0, eps_, min_feasible_epsilon(t)}},
                                min_feasible_epsilon(t));
  }
}

double ColumnModel::log_z_excl(std::size_t t) const { return log_z_excl_[t]; }

double ColumnModel::log_z_policy(std::size_t t) const {
  return policy_ == DenominatorPolicy::kPaperVerbatim
             ? LogAddExp(log_z_excl_[t], 0.0)
             : log_z_excl_[t];
}

BetaBounds ColumnModel::beta_bounds(std::size_t t) const {
  require_feasible(t);
  const double log_z = log_z_policy(t);
  BetaBounds b;
  b.lower = log_psi_ - dmin_[t] * inv_m_ - log_z;
  b.upper = eps_ + log_psi_ - dmax_[t] * inv_m_ - log_z;
  return b;
}

double ColumnModel::log_replace_unit(std::size_t t) const {
  // ln(1 - p) - ln Z with 1 - p = 1 / (1 + exp(beta - ln psi)).
  const double beta = beta_bounds(t).upper;
  const double x = beta - log_psi_;
  const double log_one_minus_p =
      x > 0 ? -x - std::log1p(std::exp(-x)) : -std::log1p(std::exp(x));
  return log_one_minus_p - log_z_policy(t);
}

double ColumnModel::keep_probability(std::size_t t) const {
  const double beta = beta_bounds(t).upper;
  const double p = 1.0 / (1.0 + std::exp(log_psi_ - beta));
  if (policy_ == DenominatorPolicy::kExcludeSelf) return p;
  // The self term's share of (1 - p) stays on the keep outcome.
  return p + (1.0 - p) * std::exp(-log_z_policy(t));
}

double ColumnModel::replacement_probability(std::size_t t, std::size_t k) const {
  if (k >= size()) {
    throw Error(ErrorKind::kIndex, fmt::format("token index {} out of range", k));
  }
  if (k == t) {
    throw Error(ErrorKind::kArgument, "replacement probability needs k != t");
  }
  const double d = std::abs(static_cast<double>(values_[t]) - values_[k]);
  return std::exp(log_replace_unit(t) - d * inv_m_);
}

OutcomeDistribution ColumnModel::outcome(std::size_t t) const {
  OutcomeDistribution out;
  out.token = t;
  out.beta = beta_bounds(t).upper;
  out.keep = keep_probability(t);
  const double unit = log_replace_unit(t);
  out.token_probabilities.resize(size());
  const double v = values_[t];
  for (std::size_t k = 0; k < size(); ++k) {
    out.token_probabilities[k] =
        k == t ? out.keep : std::exp(unit - std::abs(v - values_[k]) * inv_m_);
  }
  return out;
}

double ColumnModel::probability_of_value(std::size_t t, float z) const {
  require_feasible(t);
  const std::uint32_t zb = Bits(z);
  auto it = std::lower_bound(multiplicity_.begin(), multiplicity_.end(),
                             std::make_pair(zb, std::size_t{0}));
  if (it == multiplicity_.end() || it->first != zb) return 0.0;
  const double count = static_cast<double>(it->second);
  const double d = std::abs(static_cast<double>(values_[t]) - static_cast<double>(z));
  const double q = std::exp(log_replace_unit(t) - d * inv_m_);
  if (Bits(values_[t]) == zb) return keep_probability(t) + (count - 1.0) * q;
  return count * q;
}

std::vector<float> ColumnModel::distinct_values() const {
  std::vector<float> out;
  out.reserve(multiplicity_.size());
  std::unordered_set<std::uint32_t> seen;
  for (std::size_t j = 0; j < sorted_.size(); ++j) {
    const float v = values_[order_[j]];
    if (seen.insert(Bits(v)).second) out.push_back(v);
  }
  return out;
}

float ColumnModel::sample(std::size_t t, const CellRng& rng) const {
  require_feasible(t);
  const std::size_t n = size();
  const std::size_t j = pos_[t];
  const double v = sorted_[j];
  const double keep = keep_probability(t);
  const double u1 = rng.uniform(0);
  if (u1 < keep) return values_[t];

  // Replacement: choose k != t with probability proportional to
  // exp(-|v - v_k| / m). Left of j the weights are exp((s_l - v)/m), right of
  // j they are exp((v - s_l)/m).
  const double left = j > 0 ? prefix_[j - 1] - v * inv_m_ : kNegInf;
  const double frac_left = std::exp(left - log_z_excl_[t]);
  const double u2 = rng.uniform(1);
  std::size_t pick;
  if (u2 < frac_left) {
    const double target = std::log(u2 / frac_left) + prefix_[j - 1];
    auto it = std::lower_bound(prefix_.begin(), prefix_.begin() + static_cast<std::ptrdiff_t>(j),
                               target);
    pick = std::min<std::size_t>(static_cast<std::size_t>(it - prefix_.begin()), j - 1);
  } else {
    const double frac_right = 1.0 - frac_left;
    const double u = frac_right > 0 ? (u2 - frac_left) / frac_right : 0.0;
    const double target = std::log1p(-std::min(u, 1.0)) + suffix_[j + 1];
    // First l in [j+1, n-1] with suffix_[l+1] <= target.
    auto first = suffix_.begin() + static_cast<std::ptrdiff_t>(j + 2);
    auto last = suffix_.begin() + static_cast<std::ptrdiff_t>(n + 1);
    auto it = std::partition_point(first, last, [&](double s) { return s > target; });
    const std::size_t r = static_cast<std::size_t>(it - suffix_.begin());
    pick = std::min(r - 1, n - 1);
  }
  return values_[order_[pick]];
}

double MinFeasibleEpsilon(const Vocabulary& vocab, std::size_t token,
                          std::size_t feature) {
  if (token >= vocab.size()) {
    throw Error(ErrorKind::kIndex, fmt::format("token index {} out of range", token));
  }
  const auto col = vocab.column(feature);
  return ColumnModel(col, vocab.dim(), 0.0, DenominatorPolicy::kExcludeSelf)
      .min_feasible_epsilon(token);
}

namespace {

ColumnModel MakeColumn(const Vocabulary& vocab, std::size_t token,
                       std::size_t feature, double eps_i, DenominatorPolicy policy) {
  if (token >= vocab.size()) {
    throw Error(ErrorKind::kIndex, fmt::format("token index {} out of range", token));
  }
  const auto col = vocab.column(feature);
  ColumnModel model(col, vocab.dim(), eps_i, policy);
  if (!model.feasible(token)) {
    throw InfeasibleBudgetError(
        {InfeasibleCell{token, feature, eps_i, model.min_feasible_epsilon(token)}},
        model.min_feasible_epsilon(token));
  }
  return model;
}

}  // namespace

BetaBounds ComputeBetaBounds(const Vocabulary& vocab, std::size_t token,
                             std::size_t feature, double eps_i,
                             DenominatorPolicy policy) {
  return MakeColumn(vocab, token, feature, eps_i, policy).beta_bounds(token);
}

OutcomeDistribution ArrProbabilities(const Vocabulary& vocab, std::size_t token,
                                     std::size_t feature, double eps_i,
                                     DenominatorPolicy policy) {
  return MakeColumn(vocab, token, feature, eps_i, policy).outcome(token);
}

float RandomizeFeature(const Vocabulary& vocab, std::size_t token,
                       std::size_t feature, double eps_i,
                       DenominatorPolicy policy, std::uint64_t seed) {
  return MakeColumn(vocab, token, feature, eps_i, policy)
      .sample(token, CellRng(seed, token, feature));
}

double MinimalUniformTotalEpsilon(const Vocabulary& vocab) {
  double worst = 0.0;
  for (std::size_t i = 0; i < vocab.dim(); ++i) {
    const auto col = vocab.column(i);
    ColumnModel model(col, vocab.dim(), 0.0, DenominatorPolicy::kExcludeSelf);
    for (std::size_t t = 0; t < vocab.size(); ++t) {
      worst = std::max(worst, model.min_feasible_epsilon(t));
    }
  }
  return worst * static_cast<double>(vocab.dim());
}

namespace {
void GuardExact(const Vocabulary& vocab) {
  if (vocab.size() > kExactAuditMaxVocab) {
    throw Error(ErrorKind::kTooLarge,
                fmt::format("exact audit limited to |V| <= {} (got {})",
                            kExactAuditMaxVocab, vocab.size()));
  }
}
}  // namespace

FeatureDistribution ExactFeatureDistribution(const Vocabulary& vocab,
                                             std::size_t token,
                                             std::size_t feature, double eps_i,
                                             DenominatorPolicy policy) {
  GuardExact(vocab);
  const ColumnModel model = MakeColumn(vocab, token, feature, eps_i, policy);
  FeatureDistribution dist;
  dist.support = model.distinct_values();
  dist.probabilities.reserve(dist.support.size());
  for (float z : dist.support) {
    dist.probabilities.push_back(model.probability_of_value(token, z));
  }
  return dist;
}

EffectiveEpsilon MeasureEffectiveEpsilon(const Vocabulary& vocab,
                                         const BudgetPlan& plan,
                                         DenominatorPolicy policy) {
  GuardExact(vocab);
  plan.Validate(vocab.dim());
  EffectiveEpsilon out;
  out.per_feature.resize(vocab.dim(), 0.0);
  std::vector<InfeasibleCell> bad;
  std::vector<ColumnModel> models;
  models.reserve(vocab.dim());
  for (std::size_t i = 0; i < vocab.dim(); ++i) {
    const auto col = vocab.column(i);
    models.emplace_back(col, vocab.dim(), plan.per_feature[i], policy);
    for (std::size_t t = 0; t < vocab.size(); ++t) {
      if (!models.back().feasible(t)) {
        bad.push_back({t, i, plan.per_feature[i], models.back().min_feasible_epsilon(t)});
      }
    }
  }
  if (!bad.empty()) throw InfeasibleBudgetError(bad, MinimalUniformTotalEpsilon(vocab));

  for (std::size_t i = 0; i < vocab.dim(); ++i) {
    const ColumnModel& model = models[i];
    double worst = 0.0;
    for (float z : model.distinct_values()) {
      double hi = 0.0;
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < vocab.size(); ++t) {
        const double p = model.probability_of_value(t, z);
        hi = std::max(hi, p);
        lo = std::min(lo, p);
      }
      if (hi <= 0.0) continue;
      const double r = lo <= 0.0 ? std::numeric_limits<double>::infinity()
                                 : std::log(hi) - std::log(lo);
      worst = std::max(worst, r);
    }
    out.per_feature[i] = worst;
  }
  out.total = 0.0;
  for (double e : out.per_feature) out.total += e;
  return out;
}

}  // namespace splitvault
