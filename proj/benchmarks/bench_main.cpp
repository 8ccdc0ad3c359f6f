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
#include <benchmark/benchmark.h>

#include <vector>

#include "splitvault/adversary.hpp"
#include "splitvault/arr.hpp"
#include "splitvault/bounds.hpp"
#include "splitvault/indvocab.hpp"
#include "splitvault/metrics.hpp"
#include "splitvault/rng.hpp"
#include "splitvault/wire.hpp"

namespace sv = splitvault;

namespace {

// Whole-vocabulary randomization; |V| x m cells.
void BM_BuildIndVocab(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto threads = static_cast<unsigned>(state.range(1));
  const auto v = sv::SynthVocabulary(n, 16, 1, 0.5);
  const sv::IndVocabBuilder builder(v, sv::BudgetPlan::Uniform(16 * 8.0, 16), sv::DenominatorPolicy::kExcludeSelf);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(builder.build(++seed, {threads}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 16));
}
BENCHMARK(BM_BuildIndVocab)->Args({1000, 1})->Args({8000, 1})->Args({8000, 4})->Unit(benchmark::kMillisecond);

// Column preparation dominates for large vocabularies (sort + prefix sums).
void BM_ColumnModel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto v = sv::SynthVocabulary(n, 1, 2, 0.5);
  const auto col = v.column(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sv::ColumnModel(col, 1, 8.0, sv::DenominatorPolicy::kExcludeSelf));
  }
}
BENCHMARK(BM_ColumnModel)->Arg(1000)->Arg(32000)->Unit(benchmark::kMillisecond);

void BM_PromptBound(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(sv::PromptReconstructionBound({13.0, 151000, 200, 0.2, 0.146}));
  }
}
BENCHMARK(BM_PromptBound);

void BM_Bleu(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  sv::SeqRng rng(3);
  std::vector<int> a(len), b(len);
  for (auto& x : a) x = static_cast<int>(rng.below(500));
  for (auto& x : b) x = static_cast<int>(rng.below(500));
  for (auto _ : state) benchmark::DoNotOptimize(sv::Bleu(a, b, 4));
}
BENCHMARK(BM_Bleu)->Arg(64)->Arg(1024);

void BM_BayesPosterior(benchmark::State& state) {
  const auto v = sv::SynthVocabulary(256, 8, 4, 0.5);
  const auto plan = sv::BudgetPlan::Uniform(8 * 4.0, 8);
  const sv::BayesAttacker bayes(v, plan, sv::DenominatorPolicy::kExcludeSelf);
  const auto ind = sv::BuildIndVocab(v, plan, 5, sv::DenominatorPolicy::kExcludeSelf);
  std::size_t t = 0;
  for (auto _ : state) benchmark::DoNotOptimize(bayes.posterior(ind.randomized.row(t++ % 256)));
}
BENCHMARK(BM_BayesPosterior);

// O(nd) transmission: one EMB frame.
void BM_EncodeEmbFrame(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const sv::Tensor t{n, 64, std::vector<float>(std::size_t{n} * 64, 0.5f)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sv::EncodeFrame(sv::Frame{sv::FrameType::kEmb, sv::kProtocolVersion, 1, sv::EncodeTensor(t)}));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(n) * 64 * 4);
}
BENCHMARK(BM_EncodeEmbFrame)->Arg(16)->Arg(512);

}  // namespace

// libbenchmark_main.a ships LTO bytecode from another compiler version.
BENCHMARK_MAIN();
