#include <benchmark/benchmark.h>

#include <vector>

#include "infooirt/corpus.hpp"
#include "infooirt/generator.hpp"
#include "infooirt/metrics.hpp"
#include "infooirt/parser.hpp"

using namespace infooirt;

namespace {

const Corpus& corpus() {
  static const Corpus c = synth_generate(SynthSpec{.n_students = 8, .n_problems = 8, .bug_rate = 0.5, .seed = 1});
  return c;
}

GeneratorConfig config(int d_model) {
  return GeneratorConfig{.d_model = d_model, .n_layers = 2, .n_heads = 4, .max_len = 256, .vocab_size = 200};
}

std::vector<TokenId> tokens(int n, int offset) {
  std::vector<TokenId> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = static_cast<TokenId>(offset + i % 150);
  return v;
}

void BM_ForwardBackward(benchmark::State& state) {
  Generator g(config(static_cast<int>(state.range(0))), 13, 1);
  const auto problem = tokens(40, 5), code = tokens(static_cast<int>(state.range(1)), 20);
  std::vector<TokenId> targets = code;
  targets.push_back(Vocabulary::kEos);
  Parameter h("h", Mat::Zero(1, 13));
  for (auto _ : state) {
    Tape t;
    const auto o = g.forward(t, problem, t.param(h), code);
    const Var l = ad::cross_entropy_sum(t, o.logits, targets, Vocabulary::kPad);
    t.backward(l);
    benchmark::DoNotOptimize(t.scalar(l));
  }
}
BENCHMARK(BM_ForwardBackward)->Args({32, 64})->Args({64, 64})->Args({64, 160});

void BM_GreedyDecode(benchmark::State& state) {
  const Generator g(config(64), 13, 1);
  const auto problem = tokens(40, 5);
  const RowVec h = RowVec::Zero(13);
  for (auto _ : state) benchmark::DoNotOptimize(g.generate(problem, h, static_cast<int>(state.range(0))).code.size());
}
BENCHMARK(BM_GreedyDecode)->Arg(32)->Arg(128);

void BM_Parse(benchmark::State& state) {
  const auto& subs = corpus().submissions;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(parses(subs[i++ % subs.size()].code));
}
BENCHMARK(BM_Parse);

void BM_CodeBleu(benchmark::State& state) {
  const auto& subs = corpus().submissions;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& a = subs[i % subs.size()];
    const auto& b = subs[(i + 1) % subs.size()];
    benchmark::DoNotOptimize(codebleu(a.code, b.code).total);
    ++i;
  }
}
BENCHMARK(BM_CodeBleu);

}  // namespace
BENCHMARK_MAIN();
