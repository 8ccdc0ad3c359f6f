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
#include "splitvault/adversary.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "splitvault/bounds.hpp"
#include "splitvault/error.hpp"
#include "splitvault/metrics.hpp"
#include "splitvault/rng.hpp"

namespace splitvault {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

BayesAttacker::BayesAttacker(const Vocabulary& source, const BudgetPlan& plan,
                             DenominatorPolicy policy)
    : n_(source.size()) {
  if (n_ > kExactAuditMaxVocab) {
    throw Error(ErrorKind::kTooLarge, fmt::format("Bayes attacker limited to |V| <= {} (got {})",
                                                  kExactAuditMaxVocab, n_));
  }
  plan.Validate(source.dim());
  for (std::size_t i = 0; i < source.dim(); ++i) {
    const auto col = source.column(i);
    const ColumnModel model(col, source.dim(), plan.per_feature[i], policy);
    auto values = model.distinct_values();
    std::sort(values.begin(), values.end(), [](float a, float b) {
      return std::bit_cast<std::uint32_t>(a) < std::bit_cast<std::uint32_t>(b);
    });
    FeatureTable table;
    table.likelihood.resize(values.size() * n_);
    table.log_likelihood.resize(values.size() * n_);
    for (std::size_t v = 0; v < values.size(); ++v) {
      table.bits.push_back(std::bit_cast<std::uint32_t>(values[v]));
      for (std::size_t t = 0; t < n_; ++t) {
        const double p = model.probability_of_value(t, values[v]);
        table.likelihood[v * n_ + t] = p;
        table.log_likelihood[v * n_ + t] = p > 0 ? std::log(p) : kNegInf;
      }
    }
    tables_.push_back(std::move(table));
  }
}

BayesPosterior BayesAttacker::posterior(std::span<const float> observed) const {
  if (observed.size() != tables_.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                fmt::format("observed row has {} features, expected {}", observed.size(), tables_.size()));
  }
  std::vector<double> score(n_, 0.0);
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    const auto& tab = tables_[i];
    const auto bits = std::bit_cast<std::uint32_t>(observed[i]);
    auto it = std::lower_bound(tab.bits.begin(), tab.bits.end(), bits);
    if (it == tab.bits.end() || *it != bits) {
      throw Error(ErrorKind::kZeroLikelihood,
                  fmt::format("feature {} value {} is not produced by any token", i, observed[i]));
    }
    const std::size_t v = static_cast<std::size_t>(it - tab.bits.begin());
    for (std::size_t t = 0; t < n_; ++t) score[t] += tab.log_likelihood[v * n_ + t];
  }
  BayesPosterior post;
  post.argmax = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
  const double top = score[post.argmax];
  if (top == kNegInf) throw Error(ErrorKind::kZeroLikelihood, "observed row has zero likelihood under every token");
  double z = 0.0;
  for (double s : score) z += std::exp(s - top);
  post.probabilities.resize(n_);
  for (std::size_t t = 0; t < n_; ++t) post.probabilities[t] = std::exp(score[t] - top) / z;
  return post;
}

std::size_t BayesAttacker::guess(std::span<const float> observed) const {
  return posterior(observed).argmax;
}

double BayesAttacker::expected_accuracy(std::size_t max_outputs) const {
  double outputs = 1.0;
  for (const auto& tab : tables_) outputs *= static_cast<double>(tab.bits.size());
  if (outputs > static_cast<double>(max_outputs)) {
    throw Error(ErrorKind::kTooLarge,
                fmt::format("{} output rows exceed the enumeration limit {}", outputs, max_outputs));
  }
  const std::size_t m = tables_.size();
  std::vector<std::size_t> idx(m, 0);
  std::vector<double> score(n_);
  double total = 0.0;
  while (true) {
    std::fill(score.begin(), score.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t t = 0; t < n_; ++t) score[t] += tables_[i].log_likelihood[idx[i] * n_ + t];
    }
    const auto g = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
    if (score[g] != kNegInf) {
      double p = 1.0;
      for (std::size_t i = 0; i < m; ++i) p *= tables_[i].likelihood[idx[i] * n_ + g];
      total += p;
    }
    std::size_t i = 0;
    for (; i < m; ++i) {
      if (++idx[i] < tables_[i].bits.size()) break;
      idx[i] = 0;
    }
    if (i == m) break;
  }
  return total / static_cast<double>(n_);
}

double ExpectedBayesAccuracy(const Vocabulary& source, const BudgetPlan& plan,
                             DenominatorPolicy policy) {
  return BayesAttacker(source, plan, policy).expected_accuracy();
}

TokenAttacker MakeBayesTokenAttacker(std::shared_ptr<const BayesAttacker> attacker) {
  return [attacker](std::span<const float> row, std::size_t, std::size_t) {
    return attacker->guess(row);
  };
}

TokenAttacker MakeUniformGuesser(std::size_t vocab_size, std::uint64_t seed) {
  if (vocab_size == 0) throw Error(ErrorKind::kArgument, "vocab size must be >= 1");
  return [vocab_size, seed](std::span<const float>, std::size_t trial, std::size_t position) {
    const double u = CellRng(seed, trial, position).uniform(0);
    return std::min(vocab_size - 1, static_cast<std::size_t>(u * static_cast<double>(vocab_size)));
  };
}

GameCounts PlayReconstructionGame(const std::vector<std::vector<std::size_t>>& prompts,
                                  const IndVocabBuilder& builder, const TokenAttacker& attacker,
                                  std::size_t trials, GameOptions options) {
  if (trials < 1) throw Error(ErrorKind::kArgument, "trials must be >= 1");
  if (prompts.empty()) throw Error(ErrorKind::kEmptyCorpus, "reconstruction game needs prompts");
  for (const auto& x : prompts) {
    if (x.empty()) throw Error(ErrorKind::kEmptySequence, "prompt of length 0 in game corpus");
  }
  GameCounts counts;
  counts.correct.assign(trials, 0);
  counts.length.assign(trials, 0);
  auto run = [&](std::size_t begin, std::size_t end) {
    std::unordered_map<std::size_t, std::vector<float>> rows;
    for (std::size_t k = begin; k < end; ++k) {
      const auto& x = prompts[k % prompts.size()];
      const std::uint64_t seed = DeriveSeed(options.seed, k);
      rows.clear();
      std::size_t c = 0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        auto it = rows.find(x[j]);
        if (it == rows.end()) it = rows.emplace(x[j], builder.randomize_row(x[j], seed)).first;
        if (attacker(it->second, k, j) == x[j]) ++c;
      }
      counts.correct[k] = c;
      counts.length[k] = x.size();
    }
  };
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::size_t>(trials, 64))));
  if (threads == 1) {
    run(0, trials);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (trials + threads - 1) / threads;
    for (std::size_t b = 0; b < trials; b += chunk) pool.emplace_back(run, b, std::min(trials, b + chunk));
  }
  return counts;
}

GameResult EvaluateGame(const GameCounts& counts, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorKind::kArgument, "rho must be in [0, 1]");
  GameResult r;
  r.rho = rho;
  r.trials = counts.correct.size();
  for (std::size_t k = 0; k < r.trials; ++k) {
    if (counts.correct[k] >= CorrectTokenCount(rho, counts.length[k])) ++r.successes;
  }
  const double n = static_cast<double>(r.trials);
  r.probability = static_cast<double>(r.successes) / n;
  r.sigma = std::sqrt(r.probability * (1.0 - r.probability) / n);
  r.ci_low = std::max(0.0, r.probability - 3.0 * r.sigma);
  r.ci_high = std::min(1.0, r.probability + 3.0 * r.sigma);
  return r;
}

GameResult ReconstructionGame(const std::vector<std::vector<std::size_t>>& prompts,
                              const IndVocabBuilder& builder, const TokenAttacker& attacker,
                              double rho, std::size_t trials, GameOptions options) {
  return EvaluateGame(PlayReconstructionGame(prompts, builder, attacker, trials, options), rho);
}

void GameThresholds::Validate() const {
  if (!(rho_b >= 0 && rho_b <= 100)) throw Error(ErrorKind::kArgument, "rho_b must be in [0, 100]");
  if (!(rho_cb >= 0 && rho_cb <= 100)) throw Error(ErrorKind::kArgument, "rho_cb must be in [0, 100]");
  if (!(rho_r >= 0 && rho_r <= 1)) throw Error(ErrorKind::kArgument, "rho_r must be in [0, 1]");
  if (!(rho_f >= 0 && rho_f < 1)) throw Error(ErrorKind::kArgument, "rho_f must be in [0, 1)");
}

AsrReport ComputeAsr(const AsrInput& in, const GameThresholds& th, AsrMode mode) {
  th.Validate();
  const std::size_t n = in.truth.size();
  if (in.reconstructions.size() != n) {
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} truth records but {} reconstruction records", n, in.reconstructions.size()));
  }
  const bool with_tests = mode == AsrMode::kCode && !in.truth_pass.empty();
  if (with_tests && (in.truth_pass.size() != n || in.reconstruction_pass.size() != n)) {
    throw Error(ErrorKind::kLengthMismatch, "pass rows must be given for every record");
  }
  AsrReport rep;
  rep.mode = mode;
  std::size_t priv = 0, conf = 0, func = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& truth = in.truth[r];
    if (truth.empty()) throw Error(ErrorKind::kEmptySequence, fmt::format("record {} has empty truth", r));
    AsrRecordScore s;
    for (const auto& recon : in.reconstructions[r]) {
      if (recon.empty()) continue;
      s.bleu = std::max(s.bleu, Bleu(recon, truth, 1));
      s.rouge = std::max(s.rouge, RougeF1(recon, truth, 1));
      if (mode == AsrMode::kCode) {
        s.code_bleu = std::max(s.code_bleu, SimplifiedCodeBleu(recon, truth));
      }
    }
    if (with_tests) {
      if (in.reconstruction_pass[r].size() != in.reconstructions[r].size()) {
        throw Error(ErrorKind::kLengthMismatch, fmt::format("record {}: pass rows per reconstruction", r));
      }
      for (const auto& row : in.reconstruction_pass[r]) {
        const auto f = Fusi(in.truth_pass[r], row);
        if (f) s.fusi = std::max(s.fusi.value_or(0.0), *f);
      }
      if (s.fusi) s.functionality = *s.fusi > th.rho_f;
    }
    s.privacy = s.bleu >= th.rho_b || s.rouge >= th.rho_r;
    s.confidentiality = mode == AsrMode::kCode && s.code_bleu >= th.rho_cb;
    priv += s.privacy;
    conf += s.confidentiality;
    if (s.functionality) {
      ++rep.functionality_records;
      func += *s.functionality;
    }
    rep.records.push_back(s);
  }
  if (n) {
    rep.privacy = static_cast<double>(priv) / static_cast<double>(n);
    rep.confidentiality = static_cast<double>(conf) / static_cast<double>(n);
  }
  if (rep.functionality_records) {
    rep.functionality = static_cast<double>(func) / static_cast<double>(rep.functionality_records);
  }
  return rep;
}

std::string FormatAsrReport(const AsrReport& rep) {
  std::string out;
  const bool code = rep.mode == AsrMode::kCode;
  out += fmt::format("mode: {}\n", code ? "code" : "prompt");
  if (code) {
    out += "# confidentiality uses simplified CodeBleu: 0.5*Bleu(n<=2) + 0.5*unigram Bleu with keywords x5\n";
  }
  out += fmt::format("records: {}\nprivacy_asr: {:.6f}\n", rep.records.size(), rep.privacy);
  if (code) {
    out += fmt::format("confidentiality_asr: {:.6f}\nfunctionality_asr: {:.6f}\nfunctionality_records: {}\n",
                       rep.confidentiality, rep.functionality, rep.functionality_records);
  }
  for (std::size_t r = 0; r < rep.records.size(); ++r) {
    const auto& s = rep.records[r];
    out += fmt::format("\nrecord: {}\nbleu: {:.6f}\nrouge: {:.6f}\nprivacy_win: {}\n", r, s.bleu, s.rouge,
                       s.privacy ? 1 : 0);
    if (code) {
      out += fmt::format("code_bleu: {:.6f}\nconfidentiality_win: {}\n", s.code_bleu, s.confidentiality ? 1 : 0);
      out += s.fusi ? fmt::format("fusi: {:.6f}\nfunctionality_win: {}\n", *s.fusi, *s.functionality ? 1 : 0)
                    : std::string("fusi: undefined\n");
    }
  }
  return out;
}

}  // namespace splitvault
