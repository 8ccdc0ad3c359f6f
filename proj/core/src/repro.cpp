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
#include "splitvault/repro.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <thread>

#include <fmt/format.h>

#include "splitvault/adversary.hpp"
#include "splitvault/arr.hpp"
#include "splitvault/bounds.hpp"
#include "splitvault/corpus.hpp"
#include "splitvault/error.hpp"
#include "splitvault/frequency_attack.hpp"
#include "splitvault/indvocab.hpp"
#include "splitvault/ltokenizer.hpp"
#include "splitvault/metrics.hpp"
#include "splitvault/oracle.hpp"
#include "splitvault/rng.hpp"
#include "splitvault/split_client.hpp"
#include "splitvault/split_server.hpp"
#include "splitvault/toy_stack.hpp"
#include "splitvault/transport.hpp"
#include "splitvault/vocab.hpp"
#include "splitvault/wire.hpp"

namespace splitvault {

namespace fs = std::filesystem;

std::string fixtures::IndVocabName(const std::string& policy, double eps_i) {
  return fmt::format("ind6x3_{}_{}.nind", policy, eps_i);
}

namespace {

// Fixture parameters. Changing any of these changes the files on disk.
constexpr std::uint64_t kVocabSeed = 7;
constexpr std::uint64_t kIndSeed = 11;
constexpr std::uint64_t kPermSeed = 5;
constexpr std::uint64_t kGameCorpusSeed = 13;
constexpr std::uint64_t kTuneCorpusSeed = 17;
constexpr std::uint64_t kFreqVocabSeed = 19;
constexpr std::uint64_t kFreqIndSeed = 23;
constexpr std::uint64_t kFreqPrivateSeed = 29;
constexpr std::uint64_t kFreqPublicSeed = 31;
constexpr std::size_t kGamePrompts = 64;
constexpr std::size_t kGamePromptLen = 8;
constexpr std::size_t kFreqVocab = 64;
constexpr std::size_t kFreqDim = 8;
constexpr std::size_t kFreqPrompts = 200;
constexpr std::size_t kTemplateLen = 5;
constexpr std::size_t kBodyLen = 30;
constexpr std::size_t kFirstBodyToken = 8;  // 5, 6, 7 form the planted phrase

const double kLevels[] = {0.5, 1.0, 2.0};
const DenominatorPolicy kPolicies[] = {DenominatorPolicy::kExcludeSelf,
                                       DenominatorPolicy::kPaperVerbatim};

BudgetPlan UniformPerFeature(double eps_i, std::size_t dim) {
  return BudgetPlan::FromSplit(std::vector<double>(dim, eps_i));
}

std::vector<CorpusRecord> RandomRecords(std::size_t count, std::size_t prompt_len,
                                        std::size_t code_len, std::size_t vocab, std::uint64_t seed) {
  SeqRng rng(seed);
  std::vector<CorpusRecord> out(count);
  for (auto& r : out) {
    for (std::size_t j = 0; j < prompt_len; ++j) r.prompt.push_back(rng.below(vocab));
    for (std::size_t j = 0; j < code_len; ++j) r.code.push_back(rng.below(vocab));
  }
  return out;
}

std::vector<CorpusRecord> TemplateRecords(std::uint64_t seed) {
  SeqRng rng(seed);
  std::vector<CorpusRecord> out(kFreqPrompts);
  for (auto& r : out) {
    for (std::size_t j = 0; j < kTemplateLen; ++j) r.prompt.push_back(j);
    std::vector<std::size_t> body;
    for (std::size_t j = 0; j < kBodyLen; ++j) body.push_back(kFirstBodyToken + rng.below(kFreqVocab - kFirstBodyToken));
    const auto at = static_cast<std::ptrdiff_t>(rng.below(kBodyLen + 1));
    const std::size_t phrase[] = {5, 6, 7};
    body.insert(body.begin() + at, std::begin(phrase), std::end(phrase));
    r.prompt.insert(r.prompt.end(), body.begin(), body.end());
  }
  return out;
}

fs::path Need(const fs::path& dir, const std::string& name) {
  fs::path p = dir / name;
  if (!fs::exists(p)) throw Error(ErrorKind::kMissingFixture, fmt::format("missing fixture {}", p.string()));
  return p;
}

// Small helper so criteria read as a list of named checks.
class Checks {
 public:
  explicit Checks(CriterionResult& r) : r_(r) {}
  void check(bool ok, std::string what) {
    r_.details.push_back(fmt::format("{} {}", ok ? "ok  " : "FAIL", what));
    all_ = all_ && ok;
  }
  void note(std::string what) { r_.details.push_back(fmt::format("     {}", what)); }
  bool all() const { return all_; }

 private:
  CriterionResult& r_;
  bool all_ = true;
};

struct Fixtures {
  fs::path dir;
  Vocabulary vocab;
  TokenPermutation perm;
  std::vector<CorpusRecord> game;
  std::vector<CorpusRecord> tune;
};

// Runs a MiddleServer on one end of a loopback pair for the lifetime of the object.
class LoopbackServer {
 public:
  explicit LoopbackServer(Middle middle) : server_(std::move(middle)) {
    auto [a, b] = MakeLoopbackPair();
    client_ = std::move(a);
    end_ = std::move(b);
    thread_ = std::thread([this] { summary_ = server_.serve(*end_); });
  }
  ~LoopbackServer() { finish(); }
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

// 1 ----------------------------------------------------------------------
void IndAudit(const Fixtures& fx, Checks& c) {
  for (const auto policy : kPolicies) {
    for (const double eps : kLevels) {
      const std::string name = fixtures::IndVocabName(ToString(policy), eps);
      const IndVocab ind = LoadIndVocab(Need(fx.dir, name));
      const IndVocabAudit a = AuditIndVocab(ind, fx.vocab);
      double worst = 0.0;
      for (double e : a.effective.per_feature) worst = std::max(worst, e);
      std::string eff;
      for (double e : a.effective.per_feature) eff += fmt::format(" {:.6f}", e);
      c.check(a.ok(), fmt::format("{}: effective eps_i [{} ] max {:.6f} vs nominal {} (+1e-9), total {:.6f}; "
                                  "digest {} rebuild {} support {}",
                                  name, eff, worst, eps, a.effective.total, a.digest_ok, a.rebuild_ok,
                                  a.support_ok));
    }
  }
}

// 2 ----------------------------------------------------------------------
void Normalization(const Fixtures& fx, Checks& c) {
  for (const auto policy : kPolicies) {
    for (const double eps : kLevels) {
      double worst_sum = 0.0, worst_margin = 1.0;
      for (std::size_t i = 0; i < fx.vocab.dim(); ++i) {
        for (std::size_t t = 0; t < fx.vocab.size(); ++t) {
          const auto o = ArrProbabilities(fx.vocab, t, i, eps, policy);
          double sum = 0.0, q = 0.0;
          for (std::size_t k = 0; k < o.token_probabilities.size(); ++k) {
            sum += o.token_probabilities[k];
            if (k != t) q = std::max(q, o.token_probabilities[k]);
          }
          worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
          worst_margin = std::min(worst_margin, o.token_probabilities[t] - q);
        }
      }
      c.check(worst_sum <= 1e-12 && worst_margin >= 0.0,
              fmt::format("{} eps_i={}: max |sum-1| {:.3e} (<=1e-12), min p-max q {:.6f} (>=0)", ToString(policy),
                          eps, worst_sum, worst_margin));
    }
  }
}

// 3 ----------------------------------------------------------------------
void Containment(const Fixtures& fx, Checks& c) {
  const std::size_t n = fx.vocab.size(), m = fx.vocab.dim();
  std::vector<std::vector<float>> support(m);
  for (std::size_t i = 0; i < m; ++i) {
    support[i] = fx.vocab.column(i);
    std::sort(support[i].begin(), support[i].end());
    support[i].erase(std::unique(support[i].begin(), support[i].end()), support[i].end());
  }
  for (const auto policy : kPolicies) {
    for (const double eps : kLevels) {
      const BudgetPlan plan = UniformPerFeature(eps, m);
      const BayesAttacker bayes(fx.vocab, plan, policy);
      const double eh = MeasureEffectiveEpsilon(fx.vocab, plan, policy).total;
      const double psi = static_cast<double>(n - 1);
      const double lo = 1.0 / (1.0 + psi * std::exp(eh));
      const double hi = std::exp(eh) / (std::exp(eh) + psi);
      double pmin = 1.0, pmax = 0.0;
      std::size_t rows = 0;
      std::vector<std::size_t> idx(m, 0);
      std::vector<float> row(m);
      for (;;) {
        for (std::size_t i = 0; i < m; ++i) row[i] = support[i][idx[i]];
        for (double p : bayes.posterior(row).probabilities) {
          pmin = std::min(pmin, p);
          pmax = std::max(pmax, p);
        }
        ++rows;
        std::size_t i = 0;
        while (i < m && ++idx[i] == support[i].size()) idx[i++] = 0;
        if (i == m) break;
      }
      c.check(pmin >= lo - 1e-9 && pmax <= hi + 1e-9,
              fmt::format("{} eps_i={}: eps_hat {:.6f}, {} rows, posterior [{:.6f}, {:.6f}] within [{:.6f}, {:.6f}]",
                          ToString(policy), eps, eh, rows, pmin, pmax, lo, hi));
    }
  }
}

// 4 ----------------------------------------------------------------------
void BoundDominance(const Fixtures& fx, const ReproOptions& opt, Checks& c) {
  constexpr std::size_t kTrials = 100'000;
  const auto prompts = Prompts(fx.game);
  const auto policy = DenominatorPolicy::kExcludeSelf;
  for (std::size_t level = 0; level < std::size(kLevels); ++level) {
    const double eps = kLevels[level];
    const BudgetPlan plan = UniformPerFeature(eps, fx.vocab.dim());
    const IndVocabBuilder builder(fx.vocab, plan, policy);
    auto bayes = std::make_shared<const BayesAttacker>(fx.vocab, plan, policy);
    const double eh = MeasureEffectiveEpsilon(fx.vocab, plan, policy).total;
    const GameCounts counts = PlayReconstructionGame(prompts, builder, MakeBayesTokenAttacker(bayes), kTrials,
                                                     {DeriveSeed(0x4e01, level), opt.threads});
    for (const double rho : {0.25, 0.5, 1.0}) {
      const GameResult g = EvaluateGame(counts, rho);
      const double bound =
          PromptReconstructionBound({eh, fx.vocab.size(), kGamePromptLen, rho, 0.0}).value;
      c.check(g.probability <= bound + 3.0 * g.sigma,
              fmt::format("eps_i={} (eps_hat {:.4f}) rho={}: P[C/|x|>=rho] = {:.5f} (sigma {:.5f}) vs bound {:.5e}",
                          eps, eh, rho, g.probability, g.sigma, bound));
    }
  }
}

// 5 ----------------------------------------------------------------------
void Anchors(Checks& c) {
  for (const double rho : {0.2, 0.4}) {
    const auto r = PromptReconstructionBound({13.0, 151'000, 200, rho, 0.146});
    c.check(r.value < 5.5e-11, fmt::format("prompt bound eps=13 |V|=151000 |x|=200 gamma=0.146 rho={}: {:.6e} (<5.5e-11)",
                                           rho, r.value));
  }
  const auto years = BruteForceYears(std::pow(26.0, -8.0), 1.0);
  c.check(std::abs(years.years - 3308.65) <= 0.1,
          fmt::format("brute force 26^-8 at 1/s: {:.4f} years (3308.65 +- 0.1)", years.years));
  const auto big = BruteForceYearsLog(-72.0 * std::log(26.0), 1.0);
  const double rel = std::abs(big.years_full_space - 2.4e94) / 2.4e94;
  c.check(rel <= 0.01, fmt::format("26^72 / 31557600 = {:.5e} (2.4e94 within 1%: {:.3f}%)", big.years_full_space,
                                   100.0 * rel));
  c.note(fmt::format("with the 1/2 expected-search factor: {:.5e} years (reported only)", big.years));
}

// 6 ----------------------------------------------------------------------
void Tokenizer(const Fixtures& fx, Checks& c) {
  std::size_t bad_bijection = 0, bad_round = 0, sequences = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (const std::size_t size : {fx.vocab.size(), std::size_t{1000}}) {
      const TokenPermutation p = GeneratePermutation(size, seed);
      std::vector<bool> hit(size, false);
      for (std::size_t i = 0; i < size; ++i) {
        const std::size_t f = p.forward[i];
        if (f >= size || hit[f] || p.inverse[f] != i) ++bad_bijection;
        if (f < size) hit[f] = true;
      }
    }
    const TokenPermutation p = GeneratePermutation(fx.vocab.size(), seed);
    SeqRng rng(DeriveSeed(0x4e06, seed));
    for (int s = 0; s < 1000; ++s, ++sequences) {
      std::vector<std::string> toks(1 + rng.below(32));
      for (auto& t : toks) t = fx.vocab.token(rng.below(fx.vocab.size()));
      if (Decode(Encode(toks, p, fx.vocab), p, fx.vocab) != toks) ++bad_round;
    }
  }
  c.check(bad_bijection == 0, fmt::format("bijection violations over 100 seeds x |V| in {{6, 1000}}: {}", bad_bijection));
  c.check(bad_round == 0, fmt::format("round-trip failures over {} sequences: {}", sequences, bad_round));

  // Position -> value table over 1e5 seeds; margins are fixed so df = 9.
  constexpr std::size_t kSeeds = 100'000;
  std::array<std::array<double, 4>, 4> cell{};
  std::map<std::vector<std::size_t>, double> whole;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const TokenPermutation p = GeneratePermutation(4, seed);
    for (std::size_t i = 0; i < 4; ++i) cell[i][p.forward[i]] += 1.0;
    whole[p.forward] += 1.0;
  }
  double chi = 0.0;
  const double expect = kSeeds / 4.0;
  for (const auto& r : cell)
    for (double o : r) chi += (o - expect) * (o - expect) / expect;
  const double limit = 9.0 + 3.0 * std::sqrt(18.0);
  c.check(chi <= limit, fmt::format("index chi-square (df 9) over 1e5 seeds at |V|=4: {:.3f} (<= {:.3f})", chi, limit));
  double chi24 = 0.0;
  const double e24 = kSeeds / 24.0;
  for (const auto& [k, o] : whole) chi24 += (o - e24) * (o - e24) / e24;
  chi24 += static_cast<double>(24 - whole.size()) * e24;
  const double limit24 = 23.0 + 3.0 * std::sqrt(46.0);
  c.check(whole.size() == 24 && chi24 <= limit24,
          fmt::format("whole-permutation chi-square (df 23): {} of 24 seen, {:.3f} (<= {:.3f})", whole.size(), chi24,
                      limit24));
}

// 7 ----------------------------------------------------------------------
void Metrics(Checks& c) {
  using S = std::vector<std::string>;
  const S abcd{"a", "b", "c", "d"}, abxy{"a", "b", "x", "y"}, wxyz{"w", "x", "y", "z"};
  c.check(Bleu(abcd, abxy, 1) == 50.0, fmt::format("bleu [a,b,c,d] vs [a,b,x,y] n=1: {}", Bleu(abcd, abxy, 1)));
  c.check(Bleu(abcd, abcd, 1) == 100.0 && Bleu(abcd, abcd, 4) == 100.0, "bleu identity = 100 (n=1, n=4)");
  // Brevity penalty by hand: 2 matching of 2, ref length 4 -> exp(1 - 2).
  const S ab{"a", "b"};
  c.check(std::abs(Bleu(ab, abcd, 1) - 100.0 * std::exp(-1.0)) < 1e-12,
          fmt::format("bleu [a,b] vs [a,b,c,d]: {:.6f} (100/e)", Bleu(ab, abcd, 1)));
  c.check(RougeF1(abcd, abcd, 1) == 1.0 && RougeF1(abcd, wxyz, 1) == 0.0, "rouge identity 1, disjoint 0");
  c.check(Crt(abcd, abxy) == 0.5, fmt::format("crt [a,b,c,d] vs [a,b,x,y]: {}", Crt(abcd, abxy)));

  // Exhaustive subsets of 3 out of 6 candidates with 2 correct.
  std::uint64_t good = 0, total = 0;
  for (unsigned mask = 0; mask < 64; ++mask) {
    if (__builtin_popcount(mask) != 3) continue;
    ++total;
    if (mask & 0b11) ++good;
  }
  const double enumerated = static_cast<double>(good) / static_cast<double>(total);
  c.check(PassAtR(6, 2, 3) == enumerated,
          fmt::format("pass@3 n=6 c=2: {} vs enumeration {}/{}", PassAtR(6, 2, 3), good, total));
  c.check(PassAtR(2, 2, 1) == 1.0 && PassAtR(2, 1, 1) == 0.5, "pass@1 (2,2)=1, (2,1)=0.5");

  const auto same = Fusi({true, false, true}, {true, false, true});
  const auto two_thirds = Fusi({true, true, true}, {true, false, true});
  const auto undefined = Fusi({false, false, false}, {true, true, true});
  c.check(same && *same == 1.0, "fusi identity = 1");
  c.check(two_thirds && std::abs(*two_thirds - 2.0 / 3.0) < 1e-15, "fusi {u1,u2,u3} vs {u1,u3} = 2/3");
  c.check(!undefined, "fusi with no truth passes is undefined");

  SeqRng rng(0x4e07);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t len = 1 + rng.below(40);
    std::vector<std::size_t> a(len), b(len);
    for (auto& v : a) v = rng.below(12);
    for (auto& v : b) v = rng.below(12);
    std::array<std::size_t, 12> ca{}, cb{};
    for (auto v : a) ++ca[v];
    for (auto v : b) ++cb[v];
    std::size_t hit = 0;
    for (int v = 0; v < 12; ++v) hit += std::min(ca[v], cb[v]);
    worst = std::max(worst, std::abs(RougeF1(b, a, 1) - static_cast<double>(hit) / static_cast<double>(len)));
  }
  c.check(worst <= 1e-12, fmt::format("rouge_f1 = C/|x| on 100 equal-length pairs, max error {:.2e}", worst));
}

// 8 ----------------------------------------------------------------------
Mat RowMat(const Eigen::RowVectorXd& r) { return Mat(r); }

void SplitEquivalence(const Fixtures& fx, Checks& c) {
  const IndVocab ind = LoadIndVocab(Need(fx.dir, fixtures::IndVocabName("exclude-self", 2.0)));
  const std::size_t m = fx.vocab.dim(), v = fx.vocab.size();
  const std::vector<CorpusRecord> batch(fx.tune.begin(), fx.tune.begin() + 4);
  double worst_logits = 0.0, worst_dy = 0.0, worst_dx = 0.0, worst_loss = 0.0;
  for (std::uint64_t s = 0; s < 25; ++s) {
    const ToyStack stack = MakeToyStack({m, 8, v, MiddleKind::kAffine, 2, 1000 + s});
    {
      LoopbackServer srv(stack.middle);
      SplitSession session(srv.client(), Hello{kProtocolVersion, SessionMode::kInference,
                                               static_cast<std::uint32_t>(m), 8, static_cast<std::uint32_t>(v), false});
      const auto& prompt = fx.game[s % fx.game.size()].prompt;
      std::vector<Eigen::RowVectorXd> steps;
      const auto out = ClientGenerate(prompt, ind, fx.perm, stack.client, session, {0.0, 4, s}, &steps);
      session.close();
      std::vector<std::size_t> seq = prompt;
      for (std::size_t k = 0; k < steps.size(); ++k) {
        const Mat logits = MonolithicOracle(stack, EmbedTokens(ind.randomized, seq)).logits;
        worst_logits = std::max(worst_logits, RelativeError(RowMat(steps[k]), RowMat(logits.row(logits.rows() - 1))));
        seq.push_back(fx.perm.inverse[out[k]]);
      }
    }
    {
      LoopbackServer srv(stack.middle);
      SplitSession session(srv.client(), Hello{kProtocolVersion, SessionMode::kTuning,
                                               static_cast<std::uint32_t>(m), 8, static_cast<std::uint32_t>(v), true});
      ClientModel model = stack.client;
      const StuningResult r = StuningRound(batch, ind, fx.perm, model, session, 0.01);
      session.close();
      for (std::size_t k = 0; k < batch.size(); ++k) {
        const TuningExample ex = MakeTuningExample(batch[k], ind, fx.perm);
        const OracleResult o = MonolithicOracle(stack, ex.embeddings, ex.rows, ex.targets);
        worst_dy = std::max(worst_dy, RelativeError(r.grad_down[k], o.dy));
        worst_dx = std::max(worst_dx, RelativeError(r.grad_up[k], o.dx));
        worst_loss = std::max(worst_loss, std::abs(r.record_loss[k] - o.loss) / std::max(1.0, std::abs(o.loss)));
      }
    }
  }
  c.check(worst_logits <= 1e-6, fmt::format("25 affine stacks, generation logits vs oracle: max rel {:.3e}", worst_logits));
  c.check(worst_dy <= 1e-6, fmt::format("STuning dL/dY vs oracle: max rel {:.3e}", worst_dy));
  c.check(worst_dx <= 1e-6, fmt::format("STuning dL/dX (via cloud) vs oracle: max rel {:.3e}", worst_dx));
  c.check(worst_loss <= 1e-6, fmt::format("STuning loss vs oracle: max rel {:.3e}", worst_loss));

  // Attention middle: analytic and cloud-returned gradients against finite differences.
  double worst_full = 0.0, worst_dir = 0.0, worst_cloud = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ToyStack stack = MakeToyStack({m, 8, v, MiddleKind::kAttention, 0, 2000 + s});
    const auto& prompt = fx.game[s].prompt;
    const Mat x = Quantize(stack.client.encoder.forward(EmbedTokens(ind.randomized, prompt)));
    SeqRng rng(DeriveSeed(0x4e08, s));
    Mat dy(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < dy.size(); ++i) dy.data()[i] = rng.uniform(-1.0, 1.0);
    dy = Quantize(dy);
    const Mat analytic = stack.middle.backward(x, dy);
    worst_full = std::max(worst_full, RelativeError(analytic, FiniteDifferenceMiddleGradient(stack.middle, x, dy, 1e-5)));
    auto f = [&](const Mat& z) { return (OracleMiddleForward(stack.middle, z).array() * dy.array()).sum(); };
    for (int d = 0; d < 10; ++d) {
      Mat dir(x.rows(), x.cols());
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir.data()[i] = rng.uniform(-1.0, 1.0);
      const double fd = DirectionalFiniteDifference(f, x, dir, 1e-5);
      const double an = (analytic.array() * dir.array()).sum();
      worst_dir = std::max(worst_dir, std::abs(an - fd) / std::max(std::abs(fd), 1e-12));
    }
    LoopbackServer srv(stack.middle);
    SplitSession session(srv.client(), Hello{kProtocolVersion, SessionMode::kTuning,
                                             static_cast<std::uint32_t>(m), 8, static_cast<std::uint32_t>(v), false});
    session.forward(x);
    const Mat cloud = session.backward(dy);
    session.close();
    worst_cloud = std::max(worst_cloud, RelativeError(cloud, FiniteDifferenceMiddleGradient(stack.middle, x, dy, 1e-5)));
  }
  c.check(worst_full <= 1e-3, fmt::format("attention dL/dX vs coordinate FD: max rel {:.3e}", worst_full));
  c.check(worst_dir <= 1e-3, fmt::format("attention, 10 random directions x 5 stacks: max rel {:.3e}", worst_dir));
  c.check(worst_cloud <= 1e-3, fmt::format("attention dL/dX returned by the cloud vs FD: max rel {:.3e}", worst_cloud));

  // 200 rounds on the whole 20-record corpus.
  const ToyStack stack = MakeToyStack({m, 8, v, MiddleKind::kAffine, 2, 77});
  LoopbackServer srv(stack.middle);
  SplitSession session(srv.client(), Hello{kProtocolVersion, SessionMode::kTuning,
                                           static_cast<std::uint32_t>(m), 8, static_cast<std::uint32_t>(v), true});
  ClientModel model = stack.client;
  std::vector<double> loss;
  for (int round = 0; round < 200; ++round) {
    loss.push_back(StuningRound(fx.tune, ind, fx.perm, model, session, 0.05).loss);
  }
  session.close();
  // Strict decrease over every 50-round window: loss[r + 50] < loss[r].
  std::size_t violations = 0;
  for (std::size_t r = 0; r + 50 < loss.size(); ++r) violations += loss[r + 50] < loss[r] ? 0 : 1;
  std::array<double, 4> window{};
  for (std::size_t r = 0; r < loss.size(); ++r) window[r / 50] += loss[r] / 50.0;
  c.check(violations == 0, fmt::format("200-round tuning: {} window violations; 50-round means {:.5f} {:.5f} {:.5f} {:.5f}",
                                       violations, window[0], window[1], window[2], window[3]));
}

// 9 ----------------------------------------------------------------------
std::optional<ProtocolError> Provoke(const Middle& middle, const std::vector<Frame>& frames) {
  LoopbackServer srv(middle);
  for (const auto& f : frames) SendFrame(srv.client(), f);
  std::optional<ProtocolError> got;
  try {
    for (;;) {
      const Frame r = RecvFrame(srv.client());
      if (r.type == FrameType::kError) {
        got = DecodeErrorCode(r.payload);
        break;
      }
      if (r.type == FrameType::kBye) break;
    }
  } catch (const Error&) {
  }
  const auto& summary = srv.finish();
  if (summary.error != got) return std::nullopt;
  return got;
}

void WireContract(const Fixtures& fx, Checks& c) {
  SeqRng rng(0x4e09);
  std::size_t round_trips = 0, bad = 0;
  auto tensor = [&](std::uint32_t n, std::uint32_t d) {
    Tensor t{n, d, {}};
    for (std::uint32_t k = 0; k < n * d; ++k) t.values.push_back(static_cast<float>(rng.uniform(-4.0, 4.0)));
    return t;
  };
  for (const FrameType type : kAllFrameTypes) {
    for (int k = 0; k < 20; ++k) {
      Frame f{type, kProtocolVersion, rng.bits(), {}};
      switch (SchemaOf(type)) {
        case PayloadSchema::kEmpty: break;
        case PayloadSchema::kHello:
          f.payload = EncodeHello({kProtocolVersion, k % 2 ? SessionMode::kTuning : SessionMode::kInference,
                                   static_cast<std::uint32_t>(1 + rng.below(64)), 8, 6, k % 2 == 1});
          break;
        case PayloadSchema::kTensor:
          f.payload = EncodeTensor(tensor(1 + static_cast<std::uint32_t>(rng.below(16)), 8));
          break;
        case PayloadSchema::kErrorCode: f.payload = EncodeErrorCode(static_cast<ProtocolError>(1 + k % 4)); break;
        case PayloadSchema::kParamAck: f.payload = EncodeParamAck({rng.uniform(), static_cast<std::uint32_t>(k)}); break;
      }
      const auto bytes = EncodeFrame(f);
      const Frame back = DecodeFrame(bytes);
      if (!(back == f) || EncodeFrame(back) != bytes) ++bad;
      ++round_trips;
    }
  }
  c.check(bad == 0, fmt::format("{} frames over all 9 types round-trip bitwise ({} mismatches)", round_trips, bad));

  for (const auto& [n, d] : {std::pair<std::uint32_t, std::uint32_t>{1, 4}, {16, 8}, {128, 32}}) {
    const Tensor t = tensor(n, d);
    const auto emb = EncodeTensor(t);
    const auto frame = EncodeFrame({FrameType::kEnriched, kProtocolVersion, 1, emb});
    const bool ok = emb.size() == 8 + 4ull * n * d && frame.size() == kFrameHeaderSize + emb.size() &&
                    DecodeTensor(emb) == t;
    c.check(ok, fmt::format("tensor payload (n={}, d={}): {} bytes (expected {})", n, d, emb.size(), 8 + 4ull * n * d));
  }

  // Out-of-order sequences against a live server.
  const ToyStack stack = MakeToyStack({fx.vocab.dim(), 8, fx.vocab.size(), MiddleKind::kAffine, 2, 9});
  const auto hello = [&](SessionMode mode, bool lora) {
    return Frame{FrameType::kHello, kProtocolVersion, 0,
                 EncodeHello({kProtocolVersion, mode, static_cast<std::uint32_t>(fx.vocab.dim()), 8,
                              static_cast<std::uint32_t>(fx.vocab.size()), lora})};
  };
  const auto emb = Frame{FrameType::kEmb, kProtocolVersion, 1, EncodeTensor(tensor(3, 8))};
  const auto grad = Frame{FrameType::kGradDown, kProtocolVersion, 1, EncodeTensor(tensor(3, 8))};
  const auto ack = Frame{FrameType::kParamAck, kProtocolVersion, 1, EncodeParamAck({0.1, 1})};
  const std::vector<std::pair<std::string, std::vector<Frame>>> cases = {
      {"EMB before HELLO", {Frame{FrameType::kEmb, kProtocolVersion, 0, emb.payload}}},
      {"GRAD_DOWN before EMB (tuning)", {hello(SessionMode::kTuning, true), grad}},
      {"GRAD_DOWN in inference", {hello(SessionMode::kInference, false), emb, grad}},
      {"PARAM_ACK in inference", {hello(SessionMode::kInference, false), ack}},
      {"second HELLO", {hello(SessionMode::kInference, false), hello(SessionMode::kInference, false)}},
      {"EMB with a foreign session id", {hello(SessionMode::kInference, false),
                                         Frame{FrameType::kEmb, kProtocolVersion, 42, emb.payload}}},
      {"ENRICHED sent by the client", {hello(SessionMode::kInference, false),
                                       Frame{FrameType::kEnriched, kProtocolVersion, 1, emb.payload}}},
  };
  for (const auto& [label, frames] : cases) {
    const auto got = Provoke(stack.middle, frames);
    c.check(got == ProtocolError::kSeq, fmt::format("{} -> {}", label, got ? ToString(*got) : "no error"));
  }

  // No frame type can carry secrets: each schema is fixed-shape, and the
  // secret artefacts fail validation under every type.
  const IndVocab ind = LoadIndVocab(Need(fx.dir, fixtures::IndVocabName("exclude-self", 1.0)));
  const std::string text = "tok0001 tok0002 tok0003";
  const std::vector<std::pair<std::string, std::vector<std::uint8_t>>> secrets = {
      {"permutation", SerializePermutation(fx.perm)},
      {"IndVocab", SerializeIndVocab(ind)},
      {"vocabulary", SerializeVocabulary(fx.vocab)},
      {"token string", std::vector<std::uint8_t>(text.begin(), text.end())},
  };
  std::size_t accepted = 0, pairs = 0;
  for (const FrameType type : kAllFrameTypes) {
    for (const auto& [label, bytes] : secrets) {
      ++pairs;
      try {
        ValidatePayload(type, bytes);
        ++accepted;
        c.note(fmt::format("{} accepted a {} payload", ToString(type), label));
      } catch (const Error&) {
      }
    }
  }
  c.check(accepted == 0, fmt::format("secret payloads accepted: {} of {} (type, artefact) pairs", accepted, pairs));
  std::size_t unknown_ok = 0;
  for (int b = 0; b < 256; ++b) {
    const bool known = b >= 1 && b <= 9;
    std::vector<std::uint8_t> header = EncodeFrame({FrameType::kBye, kProtocolVersion, 0, {}});
    header[6] = static_cast<std::uint8_t>(b);
    bool decoded = true;
    try {
      DecodeFrameHeader(header);
    } catch (const Error&) {
      decoded = false;
    }
    if (decoded == known) ++unknown_ok;
  }
  c.check(unknown_ok == 256, fmt::format("frame type byte: {} of 256 values classified correctly", unknown_ok));
}

// 10 ---------------------------------------------------------------------
void FrequencyReproduction(const Fixtures& fx, Checks& c) {
  const Vocabulary vocab = LoadVocabulary(Need(fx.dir, fixtures::kFreqVocab));
  const IndVocab ind = LoadIndVocab(Need(fx.dir, fixtures::kFreqIndVocab));
  const auto priv = Prompts(LoadCorpus(Need(fx.dir, fixtures::kFreqPrivate), vocab));
  const auto pub = Prompts(LoadCorpus(Need(fx.dir, fixtures::kFreqPublic), vocab));
  c.check(ind.source_digest == VocabularyDigest(vocab), "IndVocab fixture derives from the frequency vocabulary");
  const ToyStack stack = MakeToyStack({vocab.dim(), 8, vocab.size(), MiddleKind::kIdentity, 0, 3});
  std::vector<ObservedPrompt> mixed, raw;
  for (const auto& x : priv) {
    const Mat e = EmbedTokens(ind.randomized, x);
    const Mat out = Quantize(stack.client.encoder.forward(e));
    ObservedPrompt a, b;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      std::vector<float> row(static_cast<std::size_t>(out.cols()));
      for (Eigen::Index j = 0; j < out.cols(); ++j) row[static_cast<std::size_t>(j)] = static_cast<float>(out(r, j));
      a.push_back(std::move(row));
      const auto src = ind.randomized.row(x[static_cast<std::size_t>(r)]);
      b.emplace_back(src.begin(), src.end());
    }
    mixed.push_back(std::move(a));
    raw.push_back(std::move(b));
  }
  const FrequencyAttackOptions opt{3, 20};
  const auto s = ScoreFrequencyAttack(FrequencyAttack(mixed, pub, opt), priv, kTemplateLen);
  c.check(s.template_correct > 0 && s.body_correct == 0 && s.post_exclusion_asr == 0.0,
          fmt::format("with encoder mixing: template {} correct / {} wrong, body {} correct / {} wrong, "
                      "post-exclusion ASR {}",
                      s.template_correct, s.template_wrong, s.body_correct, s.body_wrong, s.post_exclusion_asr));
  const auto ctl = ScoreFrequencyAttack(FrequencyAttack(raw, pub, opt), priv, kTemplateLen);
  c.check(ctl.body_correct >= 1,
          fmt::format("control without mixing: template {} correct, body {} correct / {} wrong, ASR {}",
                      ctl.template_correct, ctl.body_correct, ctl.body_wrong, ctl.post_exclusion_asr));
}

// 11 ---------------------------------------------------------------------
void Monotonicity(const Fixtures& fx, Checks& c) {
  const auto policy = DenominatorPolicy::kExcludeSelf;
  double prev = 0.0;
  bool mono = true;
  std::string seq;
  for (const double eps : {0.5, 1.0, 2.0, 5.0, 20.0}) {
    const double acc = ExpectedBayesAccuracy(fx.vocab, UniformPerFeature(eps, fx.vocab.dim()), policy);
    mono = mono && acc >= prev;
    prev = acc;
    seq += fmt::format(" {}:{:.6f}", eps, acc);
  }
  c.check(mono, fmt::format("exact Bayes accuracy by eps_i:{}", seq));
  const double top = ExpectedBayesAccuracy(fx.vocab, UniformPerFeature(50.0, fx.vocab.dim()), policy);
  c.check(top > 0.99, fmt::format("eps_i=50: {:.8f} (> 0.99)", top));
}

struct Spec {
  int id;
  const char* name;
  double budget;
};

constexpr Spec kSpecs[] = {
    {1, "exact eps-IND audit of the IndVocab fixtures", 5},
    {2, "ARR normalization and keep dominance", 1},
    {3, "posterior containment at the measured budget", 5},
    {4, "prompt bound dominates the Monte Carlo game", 60},
    {5, "bound and brute-force anchors", 1},
    {6, "LTokenizer bijection, round trip, uniformity", 30},
    {7, "metric oracles", 5},
    {8, "split stack equals the monolithic oracle", 120},
    {9, "wire contract", 5},
    {10, "frequency attack with and without encoder mixing", 60},
    {11, "Bayes accuracy is monotone in eps", 30},
};

}  // namespace

bool ReproReport::all_passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.passed(); });
}

void WriteFixtures(const fs::path& dir) {
  fs::create_directories(dir);
  const Vocabulary vocab = SynthVocabulary(6, 3, kVocabSeed, 0.5);
  SaveVocabulary(vocab, dir / fixtures::kVocab);
  for (const auto policy : kPolicies) {
    for (const double eps : kLevels) {
      SaveIndVocab(BuildIndVocab(vocab, UniformPerFeature(eps, vocab.dim()), kIndSeed, policy),
                   dir / fixtures::IndVocabName(ToString(policy), eps));
    }
  }
  SavePermutation(GeneratePermutation(vocab.size(), kPermSeed), dir / fixtures::kPermutation);
  SaveCorpus(RandomRecords(kGamePrompts, kGamePromptLen, 0, vocab.size(), kGameCorpusSeed), vocab,
             dir / fixtures::kGamePrompts);
  auto tune = RandomRecords(20, 4, 4, vocab.size(), kTuneCorpusSeed);
  for (auto& r : tune) r.tests = {"t1", "t2"};
  SaveCorpus(tune, vocab, dir / fixtures::kTuneCorpus);

  const Vocabulary fv = SynthVocabulary(kFreqVocab, kFreqDim, kFreqVocabSeed, 0.5);
  SaveVocabulary(fv, dir / fixtures::kFreqVocab);
  SaveIndVocab(BuildIndVocab(fv, UniformPerFeature(1.0, kFreqDim), kFreqIndSeed, DenominatorPolicy::kExcludeSelf),
               dir / fixtures::kFreqIndVocab);
  SaveCorpus(TemplateRecords(kFreqPrivateSeed), fv, dir / fixtures::kFreqPrivate);
  SaveCorpus(TemplateRecords(kFreqPublicSeed), fv, dir / fixtures::kFreqPublic);
}

ReproReport RunReproductionSuite(const fs::path& dir, const ReproOptions& options) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kMissingFixture, fmt::format("no fixture directory {}", dir.string()));
  Fixtures fx{dir, LoadVocabulary(Need(dir, fixtures::kVocab)),
              LoadPermutation(Need(dir, fixtures::kPermutation)), {}, {}};
  fx.game = LoadCorpus(Need(dir, fixtures::kGamePrompts), fx.vocab);
  fx.tune = LoadCorpus(Need(dir, fixtures::kTuneCorpus), fx.vocab);

  const std::map<int, std::function<void(Checks&)>> run = {
      {1, [&](Checks& c) { IndAudit(fx, c); }},
      {2, [&](Checks& c) { Normalization(fx, c); }},
      {3, [&](Checks& c) { Containment(fx, c); }},
      {4, [&](Checks& c) { BoundDominance(fx, options, c); }},
      {5, [&](Checks& c) { Anchors(c); }},
      {6, [&](Checks& c) { Tokenizer(fx, c); }},
      {7, [&](Checks& c) { Metrics(c); }},
      {8, [&](Checks& c) { SplitEquivalence(fx, c); }},
      {9, [&](Checks& c) { WireContract(fx, c); }},
      {10, [&](Checks& c) { FrequencyReproduction(fx, c); }},
      {11, [&](Checks& c) { Monotonicity(fx, c); }},
  };
  ReproReport report;
  for (const auto& spec : kSpecs) {
    if (!options.only.empty() && !options.only.count(spec.id)) continue;
    CriterionResult r;
    r.id = spec.id;
    r.name = spec.name;
    r.budget_seconds = spec.budget;
    Checks checks(r);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run.at(spec.id)(checks);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kMissingFixture) throw;
      checks.check(false, fmt::format("error ({}): {}", ToString(e.kind()), e.what()));
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.checks_passed = checks.all();
    report.criteria.push_back(std::move(r));
  }
  return report;
}

std::string FormatReproReport(const ReproReport& report) {
  std::string out;
  for (const auto& c : report.criteria) {
    out += fmt::format("{} [{:>2}] {} ({:.2f} s, budget {} s)\n", c.passed() ? "PASS" : "FAIL", c.id, c.name, c.seconds,
                       c.budget_seconds);
    if (c.checks_passed && c.seconds >= c.budget_seconds) out += "       FAIL over the runtime budget\n";
    for (const auto& d : c.details) out += fmt::format("       {}\n", d);
  }
  std::size_t passed = 0;
  for (const auto& c : report.criteria) passed += c.passed() ? 1 : 0;
  out += fmt::format("{} of {} criteria passed\n", passed, report.criteria.size());
  return out;
}

}  // namespace splitvault
