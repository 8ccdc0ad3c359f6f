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
// splitvault command line. Every subcommand is a thin adapter: parse flags,
// call into splitvault::core, print a table or key/value block.
//
// Exit codes: 0 ok, 1 domain error, 2 usage error.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "splitvault/adversary.hpp"
#include "splitvault/arr.hpp"
#include "splitvault/binary_io.hpp"
#include "splitvault/bounds.hpp"
#include "splitvault/corpus.hpp"
#include "splitvault/error.hpp"
#include "splitvault/frequency_attack.hpp"
#include "splitvault/indvocab.hpp"
#include "splitvault/ltokenizer.hpp"
#include "splitvault/metrics.hpp"
#include "splitvault/perturbation.hpp"
#include "splitvault/repro.hpp"
#include "splitvault/split_client.hpp"
#include "splitvault/split_server.hpp"
#include "splitvault/toy_stack.hpp"
#include "splitvault/transport.hpp"
#include "splitvault/vocab.hpp"

namespace sv = splitvault;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string output;
  bool verbose = false;
  int exit_code = 0;
};

Globals g;

std::uint64_t Seed(const char* cmd) {
  if (g.seed_opt->count() == 0) {
    throw UsageError(fmt::format("--seed: {} is randomized and needs a seed (flag or NOIR_SEED)", cmd));
  }
  return g.seed;
}

// Writes to --output when given, stdout otherwise.
class Out {
 public:
  Out() {
    if (!g.output.empty()) {
      file_.open(g.output, std::ios::binary);
      if (!file_) throw sv::Error(sv::ErrorKind::kIo, fmt::format("cannot open {} for writing", g.output));
    }
  }
  template <class... A>
  void line(fmt::format_string<A...> f, A&&... a) {
    stream() << fmt::format(f, std::forward<A>(a)...) << '\n';
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<std::string> Words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string ReadText(const std::string& path) {
  const auto bytes = sv::ReadFileBytes(path);
  return std::string(bytes.begin(), bytes.end());
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    out.push_back(l);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

// "26^-8", "1e-11", "0.5"
double ParseLogProbability(const std::string& text) {
  const auto caret = text.find('^');
  try {
    if (caret == std::string::npos) {
      std::size_t used = 0;
      const double p = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return std::log(p);
    }
    std::size_t a = 0, b = 0;
    const std::string base_s = text.substr(0, caret), exp_s = text.substr(caret + 1);
    const double base = std::stod(base_s, &a), exponent = std::stod(exp_s, &b);
    if (a != base_s.size() || b != exp_s.size() || !(base > 0)) throw std::invalid_argument(text);
    return exponent * std::log(base);
  } catch (const std::logic_error&) {
    throw UsageError(fmt::format("--prob: cannot parse '{}' (expected a number or base^exponent)", text));
  }
}

// 3308.6518 -> "3,308.65"
std::string Grouped(double v) {
  if (!std::isfinite(v) || std::abs(v) >= 1e15) return fmt::format("{:.6e}", v);
  std::string s = fmt::format("{:.2f}", std::abs(v));
  const auto dot = s.find('.');
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(dot) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return v < 0 ? "-" + s : s;
}

sv::BudgetPlan PlanFor(double total_eps, const std::string& split_file, std::size_t dim) {
  if (split_file.empty()) return sv::BudgetPlan::Uniform(total_eps, dim);
  std::vector<double> per;
  for (const auto& w : Words(ReadText(split_file))) {
    try {
      per.push_back(std::stod(w));
    } catch (const std::logic_error&) {
      throw sv::Error(sv::ErrorKind::kFormat, fmt::format("{}: '{}' is not a number", split_file, w));
    }
  }
  auto plan = sv::BudgetPlan::FromSplit(std::move(per));
  if (std::abs(plan.total_epsilon - total_eps) > 1e-12 * std::max(1.0, total_eps)) {
    throw UsageError(fmt::format("--eps: split file sums to {} but --eps is {}", plan.total_epsilon, total_eps));
  }
  plan.Validate(dim);
  return plan;
}

sv::ToyStack LoadStack(const std::string& middle, std::size_t m, std::size_t vocab_size, std::size_t rank,
                       std::uint64_t model_seed) {
  return sv::MakeToyStack({m, 8, vocab_size, sv::ParseMiddleKind(middle), rank, model_seed});
}

void Report(Out& out, const sv::PerturbationStats& s, const char* label) {
  out.line("{}.tokens_changed = {:.6f}", label, s.percent_tokens_changed);
  out.line("{}.strings_changed = {:.6f}", label, s.percent_strings_changed);
  out.line("{}.mean_l1 = {:.6f}", label, s.mean_l1());
  out.line("{}.mean_bigram_cos_change = {:.6f}", label, s.mean_bigram_cos_change());
  out.line("{}.mean_pairwise_cos_change = {:.6f}", label, s.mean_pairwise_cos_change());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"splitvault: private split inference toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "flat key=value file; flags override it");
  g.seed_opt = app.add_option("--seed", g.seed, "seed for randomized commands")->envname("NOIR_SEED");
  app.add_option("-o,--output", g.output, "write the report here instead of stdout");
  app.add_flag("-v,--verbose", g.verbose, "more detail");

  std::function<void()> action;
  auto bind = [&](CLI::App* sub, std::function<void()> fn) { sub->callback([&action, fn] { action = fn; }); };

  // vocab ---------------------------------------------------------------
  auto* vocab = app.add_subcommand("vocab", "plain vocabularies")->require_subcommand(1);
  {
    auto* gen = vocab->add_subcommand("gen", "synthetic vocabulary (tokNNNN, uniform values)");
    static std::size_t size = 0, dim = 0;
    static double scale = 1.0;
    static std::string out_path;
    gen->add_option("--size", size, "|V|")->required()->check(CLI::Range(std::size_t{2}, std::size_t{1} << 31));
    gen->add_option("--dim", dim, "m")->required()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
    gen->add_option("--scale", scale, "values in [-scale, scale]")->check(CLI::PositiveNumber);
    gen->add_option("--out", out_path, "NVCB file")->required();
    bind(gen, [] {
      const auto v = sv::SynthVocabulary(size, dim, Seed("vocab gen"), scale);
      sv::SaveVocabulary(v, out_path);
      Out o;
      o.line("vocab = {}", out_path);
      o.line("size = {}", v.size());
      o.line("dim = {}", v.dim());
      o.line("digest = {}", sv::DigestHex(sv::VocabularyDigest(v)));
    });
    auto* inspect = vocab->add_subcommand("inspect", "summary of an NVCB file");
    static std::string path;
    static std::size_t rows = 0;
    inspect->add_option("--vocab", path)->required()->check(CLI::ExistingFile);
    inspect->add_option("--rows", rows, "print the first N rows");
    bind(inspect, [] {
      const auto v = sv::LoadVocabulary(path);
      Out o;
      o.line("size = {}", v.size());
      o.line("dim = {}", v.dim());
      o.line("digest = {}", sv::DigestHex(sv::VocabularyDigest(v)));
      o.line("min_uniform_total_eps = {:.9g}", sv::MinimalUniformTotalEpsilon(v));
      for (std::size_t t = 0; t < std::min(rows, v.size()); ++t) {
        std::string r;
        for (float x : v.row(t)) r += fmt::format(" {:.6g}", x);
        o.line("{}{}", v.token(t), r);
      }
    });
  }

  // indvocab ------------------------------------------------------------
  auto* ind = app.add_subcommand("indvocab", "randomized vocabularies")->require_subcommand(1);
  {
    auto* build = ind->add_subcommand("build", "randomize every (token, feature) cell once");
    static std::string vpath, out_path, split, policy = "exclude-self";
    static double eps = 0;
    static unsigned threads = 0;
    build->add_option("--vocab", vpath)->required()->check(CLI::ExistingFile);
    build->add_option("--eps", eps, "TOTAL budget")->required()->check(CLI::NonNegativeNumber);
    build->add_option("--split", split, "per-feature eps_i, whitespace separated")->check(CLI::ExistingFile);
    build->add_option("--policy", policy, "exclude-self | paper")->check(CLI::IsMember({"exclude-self", "paper"}));
    build->add_option("--threads", threads);
    build->add_option("--out", out_path, "NIND file")->required();
    bind(build, [] {
      const auto v = sv::LoadVocabulary(vpath);
      const auto plan = PlanFor(eps, split, v.dim());
      const auto seed = Seed("indvocab build");
      const auto r = sv::BuildIndVocab(v, plan, seed, sv::ParseDenominatorPolicy(policy), {threads});
      sv::SaveIndVocab(r, out_path);
      Out o;
      o.line("indvocab = {}", out_path);
      o.line("eps = {}", plan.total_epsilon);
      o.line("policy = {}", sv::ToString(r.policy));
      o.line("seed = {}", r.seed);
      o.line("source_digest = {}", sv::DigestHex(r.source_digest));
    });
    auto* audit = ind->add_subcommand("audit", "integrity and exact eps-IND audit");
    static std::string ipath, spath;
    audit->add_option("--ind", ipath)->required()->check(CLI::ExistingFile);
    audit->add_option("--vocab", spath, "source vocabulary")->required()->check(CLI::ExistingFile);
    bind(audit, [] {
      const auto a = sv::AuditIndVocab(sv::LoadIndVocab(ipath), sv::LoadVocabulary(spath));
      Out o;
      o.line("digest_ok = {}", a.digest_ok);
      o.line("tokens_ok = {}", a.tokens_ok);
      o.line("support_ok = {} (foreign cells {})", a.support_ok, a.foreign_cells);
      o.line("rebuild_ok = {}", a.rebuild_ok);
      for (std::size_t i = 0; i < a.effective.per_feature.size(); ++i) {
        o.line("effective_eps[{}] = {:.9f}{}", i, a.effective.per_feature[i],
               i < a.within_budget.size() && !a.within_budget[i] ? "  OVER BUDGET" : "");
      }
      o.line("effective_eps_total = {:.9f}", a.effective.total);
      o.line("ind_ok = {}", a.ind_ok);
      o.line("audit = {}", a.ok() ? "pass" : "fail");
      if (!a.ok()) g.exit_code = 1;
    });
  }

  // ltok ----------------------------------------------------------------
  auto* ltok = app.add_subcommand("ltok", "secret token permutations")->require_subcommand(1);
  {
    auto* gen = ltok->add_subcommand("gen", "uniform permutation of [0, size)");
    static std::size_t size = 0;
    static std::string out_path;
    static bool reveal = false;
    gen->add_option("--size", size)->required()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 31));
    gen->add_option("--out", out_path, "NPRM file")->required();
    gen->add_flag("--reveal", reveal, "print the forward array (secret)");
    bind(gen, [] {
      const auto p = sv::GeneratePermutation(size, Seed("ltok gen"));
      sv::SavePermutation(p, out_path);
      Out o;
      o.line("permutation = {}", out_path);
      o.line("size = {}", p.size);
      if (reveal) {
        std::string f;
        for (auto x : p.forward) f += fmt::format(" {}", x);
        o.line("forward ={}", f);
      }
    });
  }

  // bounds --------------------------------------------------------------
  auto* bounds = app.add_subcommand("bounds", "closed-form reconstruction bounds")->require_subcommand(1);
  {
    static double eps = 0, rho = 1, gamma = 0, eps_from = 0, eps_to = 20, rate = 1;
    static std::size_t vsize = 0, len = 1, steps = 21;
    static std::string prob;
    auto* token = bounds->add_subcommand("token", "per-token inference bounds");
    token->add_option("--eps", eps)->required()->check(CLI::NonNegativeNumber);
    token->add_option("--vocab-size", vsize)->required()->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
    bind(token, [] {
      const auto b = sv::TokenInferenceBounds(eps, vsize);
      Out o;
      o.line("lower = {:.12g}", b.lower);
      o.line("upper = {:.12g}", b.upper);
    });
    auto add_prompt_flags = [](CLI::App* s) {
      s->add_option("--vocab-size", vsize)->required()->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
      s->add_option("--len", len, "|x|")->required()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30));
      s->add_option("--rho", rho)->check(CLI::Range(0.0, 1.0))->default_val(1.0);
      s->add_option("--gamma", gamma)->check(CLI::Range(0.0, 1.0))->default_val(0.0);
    };
    auto prompt_line = [](Out& o, const sv::PromptBoundReport& r) {
      o.line("{:>10.4f} {:>6} {:>14.6e} {:>10.3f} {}", r.params.epsilon, r.correct, r.value, r.log10_value,
             r.vacuous ? "vacuous" : "");
    };
    auto* prompt = bounds->add_subcommand("prompt", "prompt reconstruction bound");
    prompt->add_option("--eps", eps)->required()->check(CLI::NonNegativeNumber);
    add_prompt_flags(prompt);
    bind(prompt, [] {
      if (!(rho > 0)) throw UsageError("--rho: must be in (0, 1]");
      const auto r = sv::PromptReconstructionBound({eps, vsize, len, rho, gamma});
      Out o;
      o.line("correct_tokens = {}", r.correct);
      o.line("bound = {:.10e}", r.value);
      o.line("log10_bound = {:.6f}", r.log10_value);
      o.line("vacuous = {}", r.vacuous);
    });
    auto* sweep = bounds->add_subcommand("sweep", "prompt bound over an eps grid");
    add_prompt_flags(sweep);
    sweep->add_option("--eps-from", eps_from)->check(CLI::NonNegativeNumber);
    sweep->add_option("--eps-to", eps_to)->check(CLI::NonNegativeNumber);
    sweep->add_option("--steps", steps)->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
    bind(sweep, [prompt_line] {
      if (!(rho > 0)) throw UsageError("--rho: must be in (0, 1]");
      if (eps_to < eps_from) throw UsageError("--eps-to: must be >= --eps-from");
      Out o;
      o.line("{:>10} {:>6} {:>14} {:>10}", "eps", "C", "bound", "log10");
      for (std::size_t k = 0; k < steps; ++k) {
        const double e = eps_from + (eps_to - eps_from) * static_cast<double>(k) / static_cast<double>(steps - 1);
        prompt_line(o, sv::PromptReconstructionBound({e, vsize, len, rho, gamma}));
      }
    });
    auto* years = bounds->add_subcommand("years", "brute-force time for a success probability");
    years->add_option("--prob", prob, "e.g. 26^-8 or 1e-11")->required();
    years->add_option("--rate", rate, "guesses per second")->check(CLI::PositiveNumber);
    bind(years, [] {
      const double lp = ParseLogProbability(prob);
      if (!(lp <= 0.0)) throw UsageError("--prob: must be in (0, 1]");
      const auto t = sv::BruteForceYearsLog(lp, rate);
      Out o;
      o.line("{}", Grouped(t.years));
      if (g.verbose) o.line("full_space_years = {}", Grouped(t.years_full_space));
    });
  }

  // attack --------------------------------------------------------------
  auto* attack = app.add_subcommand("attack", "adversary games")->require_subcommand(1);
  {
    static std::string vpath, policy = "exclude-self", corpus, split;
    static double eps = 0;
    auto common = [](CLI::App* s) {
      s->add_option("--vocab", vpath)->required()->check(CLI::ExistingFile);
      s->add_option("--eps", eps, "TOTAL budget")->required()->check(CLI::NonNegativeNumber);
      s->add_option("--split", split)->check(CLI::ExistingFile);
      s->add_option("--policy", policy)->check(CLI::IsMember({"exclude-self", "paper"}));
    };
    auto* bayes = attack->add_subcommand("bayes", "exact Bayes-optimal token attacker");
    common(bayes);
    static std::string ind_path, token;
    bayes->add_option("--ind", ind_path, "posterior for one token's row of this IndVocab")->check(CLI::ExistingFile);
    bayes->add_option("--token", token);
    bind(bayes, [] {
      const auto v = sv::LoadVocabulary(vpath);
      const auto plan = PlanFor(eps, split, v.dim());
      const sv::BayesAttacker a(v, plan, sv::ParseDenominatorPolicy(policy));
      Out o;
      if (!ind_path.empty()) {
        if (token.empty()) throw UsageError("--token: required with --ind");
        const auto r = sv::LoadIndVocab(ind_path);
        const auto post = a.posterior(r.randomized.row(r.randomized.index_of(token)));
        o.line("guess = {}", v.token(post.argmax));
        for (std::size_t t = 0; t < post.probabilities.size(); ++t) {
          if (g.verbose || post.probabilities[t] > 1e-6) o.line("{} {:.9f}", v.token(t), post.probabilities[t]);
        }
        return;
      }
      const double eh = sv::MeasureEffectiveEpsilon(v, plan, sv::ParseDenominatorPolicy(policy)).total;
      o.line("expected_accuracy = {:.9f}", a.expected_accuracy());
      o.line("effective_eps_total = {:.9f}", eh);
      o.line("token_upper_bound = {:.9f}", sv::TokenInferenceBounds(eh, v.size()).upper);
    });
    auto* game = attack->add_subcommand("game", "Monte Carlo prompt reconstruction game");
    common(game);
    static double rho = 1.0;
    static std::size_t trials = 10000;
    static std::string who = "bayes";
    static unsigned threads = 0;
    game->add_option("--corpus", corpus, "TSV corpus; prompts are used")->required()->check(CLI::ExistingFile);
    game->add_option("--rho", rho)->check(CLI::Range(0.0, 1.0));
    game->add_option("--trials", trials)->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
    game->add_option("--attacker", who)->check(CLI::IsMember({"bayes", "uniform"}));
    game->add_option("--threads", threads);
    bind(game, [] {
      if (!(rho > 0)) throw UsageError("--rho: must be in (0, 1]");
      const auto seed = Seed("attack game");
      const auto v = sv::LoadVocabulary(vpath);
      const auto plan = PlanFor(eps, split, v.dim());
      const auto pol = sv::ParseDenominatorPolicy(policy);
      const auto prompts = sv::Prompts(sv::LoadCorpus(corpus, v));
      const sv::IndVocabBuilder builder(v, plan, pol);
      const auto attacker = who == "bayes"
                                ? sv::MakeBayesTokenAttacker(std::make_shared<const sv::BayesAttacker>(v, plan, pol))
                                : sv::MakeUniformGuesser(v.size(), sv::DeriveSeed(seed, 1));
      const auto r = sv::ReconstructionGame(prompts, builder, attacker, rho, trials, {seed, threads});
      Out o;
      o.line("trials = {}", r.trials);
      o.line("successes = {}", r.successes);
      o.line("probability = {:.6f}", r.probability);
      o.line("sigma = {:.6f}", r.sigma);
      o.line("ci3 = [{:.6f}, {:.6f}]", r.ci_low, r.ci_high);
      if (prompts.size() == 1 || std::all_of(prompts.begin(), prompts.end(),
                                             [&](const auto& x) { return x.size() == prompts[0].size(); })) {
        const double eh = sv::MeasureEffectiveEpsilon(v, plan, pol).total;
        o.line("bound = {:.6e}", sv::PromptReconstructionBound({eh, v.size(), prompts[0].size(), rho, 0.0}).value);
      }
    });
    auto* freq = attack->add_subcommand("freq", "k-gram frequency attack on observed embeddings");
    static std::string ind2, priv, pub, mix = "encoder";
    static std::size_t k = 3, min_support = 20, template_len = 0;
    static std::uint64_t model_seed = 3;
    freq->add_option("--vocab", vpath)->required()->check(CLI::ExistingFile);
    freq->add_option("--ind", ind2)->required()->check(CLI::ExistingFile);
    freq->add_option("--private", priv, "victim prompts (truth, for scoring)")->required()->check(CLI::ExistingFile);
    freq->add_option("--public", pub, "attacker's public corpus")->required()->check(CLI::ExistingFile);
    freq->add_option("--observe", mix, "encoder | raw")->check(CLI::IsMember({"encoder", "raw"}));
    freq->add_option("--model-seed", model_seed);
    freq->add_option("--k", k)->check(CLI::Range(std::size_t{1}, std::size_t{64}));
    freq->add_option("--min-support", min_support);
    freq->add_option("--template-len", template_len, "known template prefix excluded from ASR");
    bind(freq, [] {
      const auto v = sv::LoadVocabulary(vpath);
      const auto r = sv::LoadIndVocab(ind2);
      const auto truth = sv::Prompts(sv::LoadCorpus(priv, v));
      const auto stack = sv::MakeToyStack({v.dim(), 8, v.size(), sv::MiddleKind::kIdentity, 0, model_seed});
      std::vector<sv::ObservedPrompt> obs;
      for (const auto& x : truth) {
        const sv::Mat e = sv::EmbedTokens(r.randomized, x);
        const sv::Mat seen = mix == "raw" ? e : sv::Quantize(stack.client.encoder.forward(e));
        sv::ObservedPrompt p;
        for (Eigen::Index i = 0; i < seen.rows(); ++i) {
          std::vector<float> row;
          for (Eigen::Index j = 0; j < seen.cols(); ++j) row.push_back(static_cast<float>(seen(i, j)));
          p.push_back(std::move(row));
        }
        obs.push_back(std::move(p));
      }
      const auto res = sv::FrequencyAttack(obs, sv::Prompts(sv::LoadCorpus(pub, v)), {k, min_support});
      const auto s = sv::ScoreFrequencyAttack(res, truth, template_len);
      Out o;
      o.line("matches = {}", res.matches.size());
      for (const auto& m : res.matches) {
        std::string toks;
        for (auto t : m.tokens) toks += " " + v.token(t);
        o.line("  rank {} support {} public {} ->{}", m.rank, m.support, m.public_support, toks);
      }
      o.line("template_correct = {}", s.template_correct);
      o.line("template_wrong = {}", s.template_wrong);
      o.line("body_correct = {}", s.body_correct);
      o.line("body_wrong = {}", s.body_wrong);
      o.line("post_exclusion_asr = {:.6f}", s.post_exclusion_asr);
    });
    auto* asr = attack->add_subcommand("asr", "attack success rate of reconstructions");
    static std::string truth_f, recon_f, truth_pass, recon_pass, mode = "prompt";
    static sv::GameThresholds th;
    asr->add_option("--truth", truth_f, "one record per line, whitespace tokens")->required()->check(CLI::ExistingFile);
    asr->add_option("--recon", recon_f, "aligned lines; several attempts separated by |||")
        ->required()
        ->check(CLI::ExistingFile);
    asr->add_option("--mode", mode)->check(CLI::IsMember({"prompt", "code"}));
    asr->add_option("--truth-pass", truth_pass, "0/1 row per record")->check(CLI::ExistingFile);
    asr->add_option("--recon-pass", recon_pass, "0/1 rows per record, |||-separated")->check(CLI::ExistingFile);
    asr->add_option("--rho-b", th.rho_b)->check(CLI::Range(0.0, 100.0));
    asr->add_option("--rho-r", th.rho_r)->check(CLI::Range(0.0, 1.0));
    asr->add_option("--rho-f", th.rho_f)->check(CLI::Range(0.0, 1.0));
    asr->add_option("--rho-cb", th.rho_cb)->check(CLI::Range(0.0, 100.0));
    bind(asr, [] {
      auto split_attempts = [](const std::string& line) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (;;) {
          const auto at = line.find("|||", start);
          parts.push_back(line.substr(start, at == std::string::npos ? std::string::npos : at - start));
          if (at == std::string::npos) break;
          start = at + 3;
        }
        return parts;
      };
      sv::AsrInput in;
      for (const auto& l : Lines(ReadText(truth_f))) in.truth.push_back(Words(l));
      for (const auto& l : Lines(ReadText(recon_f))) {
        std::vector<std::vector<std::string>> attempts;
        for (const auto& p : split_attempts(l)) attempts.push_back(Words(p));
        in.reconstructions.push_back(std::move(attempts));
      }
      if (!truth_pass.empty() || !recon_pass.empty()) {
        if (truth_pass.empty() || recon_pass.empty()) throw UsageError("--truth-pass: needs --recon-pass too");
        in.truth_pass = sv::ParsePassMatrix(ReadText(truth_pass));
        for (const auto& l : Lines(ReadText(recon_pass))) {
          std::vector<std::vector<bool>> rows;
          for (const auto& p : split_attempts(l)) {
            const auto m = sv::ParsePassMatrix(p);
            rows.push_back(m.empty() ? std::vector<bool>{} : m[0]);
          }
          in.reconstruction_pass.push_back(std::move(rows));
        }
      }
      const auto rep = sv::ComputeAsr(in, th, mode == "code" ? sv::AsrMode::kCode : sv::AsrMode::kPrompt);
      Out o;
      o.stream() << sv::FormatAsrReport(rep);
    });
  }

  // metrics -------------------------------------------------------------
  auto* metrics = app.add_subcommand("metrics", "similarity and evaluation metrics")->require_subcommand(1);
  {
    static std::string cand, ref;
    static std::size_t n = 1;
    auto seqs = [](CLI::App* s, const char* a, const char* b) {
      s->add_option(a, cand, "whitespace-separated tokens")->required();
      s->add_option(b, ref, "whitespace-separated tokens")->required();
    };
    auto* bleu = metrics->add_subcommand("bleu", "BLEU-n, 0..100");
    seqs(bleu, "--cand", "--ref");
    bleu->add_option("--n", n)->check(CLI::Range(std::size_t{1}, std::size_t{16}));
    bind(bleu, [] { Out().line("{:.6f}", sv::Bleu(Words(cand), Words(ref), n)); });
    auto* rouge = metrics->add_subcommand("rouge", "ROUGE-n F1, 0..1");
    seqs(rouge, "--cand", "--ref");
    rouge->add_option("--n", n)->check(CLI::Range(std::size_t{1}, std::size_t{16}));
    bind(rouge, [] { Out().line("{:.6f}", sv::RougeF1(Words(cand), Words(ref), n)); });
    auto* crt = metrics->add_subcommand("crt", "fraction of correctly reconstructed tokens");
    seqs(crt, "--truth", "--recon");
    bind(crt, [] { Out().line("{:.6f}", sv::Crt(Words(cand), Words(ref))); });
    auto* leak = metrics->add_subcommand("leak", "1 if a sensitive identifier leaks");
    static std::string tc, rc;
    leak->add_option("--truth-code", tc, "file")->required()->check(CLI::ExistingFile);
    leak->add_option("--recon-code", rc, "file")->required()->check(CLI::ExistingFile);
    bind(leak, [] { Out().line("{}", sv::Leak(ReadText(tc), ReadText(rc))); });
    auto* fusi = metrics->add_subcommand("fusi", "functional similarity of two pass rows");
    static std::string tr, rr;
    fusi->add_option("--truth", tr, "0/1 string")->required();
    fusi->add_option("--recon", rr, "0/1 string")->required();
    bind(fusi, [] {
      auto row = [](const std::string& s, const char* flag) {
        const auto m = sv::ParsePassMatrix(s);
        if (m.size() != 1) throw UsageError(fmt::format("{}: expected one 0/1 row", flag));
        return m[0];
      };
      const auto f = sv::Fusi(row(tr, "--truth"), row(rr, "--recon"));
      Out().line("{}", f ? fmt::format("{:.6f}", *f) : std::string("undefined"));
    });
    auto* passr = metrics->add_subcommand("passr", "unbiased pass@r");
    static std::uint64_t pn = 0, pc = 0, pr = 1;
    passr->add_option("--n", pn, "candidates")->required();
    passr->add_option("--c", pc, "correct candidates")->required();
    passr->add_option("--r", pr)->required()->check(CLI::PositiveNumber);
    bind(passr, [] {
      if (pc > pn) throw UsageError("--c: must be <= --n");
      if (pr > pn) throw UsageError("--r: must be <= --n");
      Out().line("{:.12g}", sv::PassAtR(pn, pc, pr));
    });
    auto* perturb = metrics->add_subcommand("perturb", "embedding perturbation statistics");
    static std::string vp, ip, cp;
    static std::size_t pairs = 1000;
    static double laplace = 0;
    perturb->add_option("--vocab", vp)->required()->check(CLI::ExistingFile);
    perturb->add_option("--ind", ip)->required()->check(CLI::ExistingFile);
    perturb->add_option("--corpus", cp)->required()->check(CLI::ExistingFile);
    perturb->add_option("--pairs", pairs);
    perturb->add_option("--laplace", laplace, "also report i.i.d. Laplace(b) noise")->check(CLI::PositiveNumber);
    bind(perturb, [perturb] {
      const auto seed = Seed("metrics perturb");
      const auto v = sv::LoadVocabulary(vp);
      const auto r = sv::LoadIndVocab(ip);
      const auto rep = sv::PerturbationAnalysis(
          v, r.randomized, sv::Prompts(sv::LoadCorpus(cp, v)), pairs, seed,
          perturb->count("--laplace") ? std::optional<double>(laplace) : std::nullopt);
      Out o;
      Report(o, rep.randomized, "indvocab");
      if (rep.laplace) Report(o, *rep.laplace, "laplace");
    });
  }

  // serve / client ------------------------------------------------------
  static std::string address = "127.0.0.1:7070", middle = "affine";
  static std::size_t lora_rank = 2, sessions = 0;
  static std::uint64_t model_seed = 0;
  auto* serve = app.add_subcommand("serve", "host the middle blocks");
  serve->add_option("--listen", address, "host:port (port 0 picks one)");
  serve->add_option("--model", middle, "identity | affine | attention")
      ->check(CLI::IsMember({"identity", "affine", "attention"}));
  serve->add_option("--lora-rank", lora_rank);
  serve->add_option("--sessions", sessions, "exit after N sessions (0 = forever)");
  bind(serve, [] {
    const auto stack = sv::MakeToyStack({1, 8, 2, sv::ParseMiddleKind(middle), lora_rank, Seed("serve")});
    sv::MiddleServer server(stack.middle);
    sv::TcpListener listener(address);
    std::printf("listening on port %u\n", static_cast<unsigned>(listener.port()));
    std::fflush(stdout);
    if (sessions == 0) {
      sv::ServeTcp(listener, server);
      return;
    }
    for (std::size_t s = 0; s < sessions; ++s) {
      auto conn = listener.accept();
      if (!conn) break;
      const auto sum = server.serve(*conn);
      if (g.verbose) {
        std::printf("session %llu: %zu frames%s\n", static_cast<unsigned long long>(sum.session), sum.frames_in,
                    sum.error ? (std::string(", error ") + sv::ToString(*sum.error)).c_str() : "");
      }
    }
  });

  auto* client = app.add_subcommand("client", "client side of split inference and tuning")->require_subcommand(1);
  {
    static std::string ind_path, perm_path, prompt, corpus;
    static std::size_t max_tokens = 16, rounds = 10;
    static double temperature = 0.25, lr = 0.05;
    auto common = [](CLI::App* s) {
      s->add_option("--connect", address, "host:port")->required();
      s->add_option("--ind", ind_path)->required()->check(CLI::ExistingFile);
      s->add_option("--perm", perm_path)->required()->check(CLI::ExistingFile);
      s->add_option("--model", middle, "middle kind hosted by the server")
          ->check(CLI::IsMember({"identity", "affine", "attention"}));
      s->add_option("--model-seed", model_seed, "seed the server used for its stack");
      s->add_option("--lora-rank", lora_rank);
    };
    auto* gen = client->add_subcommand("generate", "generate tokens for a prompt");
    common(gen);
    gen->add_option("--prompt", prompt, "whitespace-separated tokens")->required();
    gen->add_option("--max-tokens", max_tokens)->check(CLI::Range(std::size_t{1}, std::size_t{4096}));
    gen->add_option("--temperature", temperature)->check(CLI::NonNegativeNumber);
    bind(gen, [] {
      const auto seed = Seed("client generate");
      const auto r = sv::LoadIndVocab(ind_path);
      const auto perm = sv::LoadPermutation(perm_path);
      const auto& v = r.randomized;
      auto stack = LoadStack(middle, v.dim(), v.size(), lora_rank, model_seed);
      auto conn = sv::TcpConnect(address);
      sv::SplitSession session(*conn, {sv::kProtocolVersion, sv::SessionMode::kInference,
                                       static_cast<std::uint32_t>(v.dim()), 8, static_cast<std::uint32_t>(v.size()),
                                       false});
      std::vector<std::size_t> ids;
      for (const auto& w : Words(prompt)) ids.push_back(v.index_of(w));
      const auto out = sv::ClientGenerate(ids, r, perm, stack.client, session, {temperature, max_tokens, seed});
      session.close();
      std::string text;
      for (auto local : out) text += (text.empty() ? "" : " ") + v.token(perm.inverse.at(local));
      Out().line("{}", text);
    });
    auto* tune = client->add_subcommand("tune", "split fine-tuning rounds over a corpus");
    common(tune);
    tune->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
    tune->add_option("--rounds", rounds)->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
    tune->add_option("--lr", lr)->check(CLI::PositiveNumber);
    bind(tune, [] {
      const auto r = sv::LoadIndVocab(ind_path);
      const auto perm = sv::LoadPermutation(perm_path);
      const auto& v = r.randomized;
      const auto records = sv::LoadCorpus(corpus, v);
      auto stack = LoadStack(middle, v.dim(), v.size(), lora_rank, model_seed);
      auto conn = sv::TcpConnect(address);
      sv::SplitSession session(*conn, {sv::kProtocolVersion, sv::SessionMode::kTuning,
                                       static_cast<std::uint32_t>(v.dim()), 8, static_cast<std::uint32_t>(v.size()),
                                       middle == "affine"});
      Out o;
      o.line("{:>6} {:>12}", "round", "loss");
      for (std::size_t k = 0; k < rounds; ++k) {
        o.line("{:>6} {:>12.6f}", k, sv::StuningRound(records, r, perm, stack.client, session, lr).loss);
      }
      session.close();
    });
  }

  // repro ---------------------------------------------------------------
  auto* repro = app.add_subcommand("repro", "run the acceptance criteria against fixtures");
  {
    static std::string dir = "fixtures", write_dir;
    static std::vector<int> only;
    repro->add_option("--fixtures", dir);
    repro->add_option("--criterion", only)->check(CLI::Range(1, sv::kCriterionCount));
    repro->add_option("--write-fixtures", write_dir, "regenerate fixtures into DIR and exit");
    bind(repro, [] {
      if (!write_dir.empty()) {
        sv::WriteFixtures(write_dir);
        Out().line("fixtures written to {}", write_dir);
        return;
      }
      sv::ReproOptions opt;
      opt.only.insert(only.begin(), only.end());
      const auto rep = sv::RunReproductionSuite(dir, opt);
      Out().stream() << sv::FormatReproReport(rep);
      if (!rep.all_passed()) g.exit_code = 1;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    if (action) action();
    return g.exit_code;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const sv::InfeasibleBudgetError& e) {
    std::fprintf(stderr, "error: %s\nminimal feasible eps (uniform split): %.9g\n", e.what(),
                 e.minimal_total_epsilon());
    return 1;
  } catch (const sv::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", sv::ToString(e.kind()), e.what());
    return 1;
  }
}
