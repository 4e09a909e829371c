#include <benchmark/benchmark.h>

#include "stagelab/embedding.hpp"
#include "stagelab/generator.hpp"
#include "stagelab/kernel.hpp"

using namespace stagelab;

namespace {

std::vector<TermPtr> bench_corpus(std::size_t n, int depth) {
  TermGen gen(1);
  std::vector<TermPtr> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(gen.typed_term(SType::Int, depth));
  return out;
}

void BM_compile_a(benchmark::State& state) {
  std::vector<TermPtr> corpus = bench_corpus(64, static_cast<int>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compile_a(corpus[i++ % corpus.size()]));
  }
}
BENCHMARK(BM_compile_a)->Arg(3)->Arg(5)->Arg(7);

void BM_run_machine(benchmark::State& state) {
  CompiledProgram c = compile_a(
      parse_source("if x < y then (x + y) * (x - y) else x * x + y * y"));
  Env env;
  env.bindings["x"] = 7;
  env.bindings["y"] = 11;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_machine(*c.code(), env, kDefaultFuel));
  }
}
BENCHMARK(BM_run_machine);

void BM_embed_and_compile_u(benchmark::State& state) {
  std::vector<TermPtr> corpus = bench_corpus(64, 5);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compile_u(embed_stage(corpus[i++ % corpus.size()])));
  }
}
BENCHMARK(BM_embed_and_compile_u);

void BM_meta_eval_loop(benchmark::State& state) {
  // count down from n by recursion: exercises the evaluator's apply path
  MetaPtr count = m_fix(m_lambda(
      "self", m_lambda("n", m_if(m_bin('=', m_var("n"), m_int(0)), m_int(0),
                                 m_apply(m_var("self"),
                                         m_bin('-', m_var("n"), m_int(1)))))));
  MetaPtr call = m_apply(count, m_int(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(meta_eval(call, kDefaultFuel));
  }
}
BENCHMARK(BM_meta_eval_loop)->Arg(100)->Arg(1000);

void BM_kernel_partition(benchmark::State& state) {
  TermGen gen(2);
  std::vector<std::string> corpus;
  for (const TermPtr& t : gen.corpus(state.range(0), 5, /*inject_duplicates=*/true))
    corpus.push_back(format_source(t));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernel_classes(corpus, CompilerKind::PlainA, kDefaultFuel));
  }
}
BENCHMARK(BM_kernel_partition)->Arg(100)->Arg(500);

} // namespace

BENCHMARK_MAIN();
