#include <benchmark/benchmark.h>

#include "stepsearch/engine.hpp"
#include "stepsearch/losses.hpp"
#include "stepsearch/mock_oracles.hpp"
#include "stepsearch/pair_sampler.hpp"
#include "stepsearch/porp.hpp"
#include "stepsearch/rng.hpp"
#include "stepsearch/tree_io.hpp"

using namespace stepsearch;

namespace {

// A finished search tree shared by the sampling benchmarks.
const TreeDump& bench_tree() {
  static const TreeDump dump = [] {
    Problem p;
    p.id = "bench";
    p.question = "Zhou wheels away a bicycle believing it his own. Does Zhou commit theft?";
    p.options = {"Yes, always", "Yes, unless forgiven", "No, intent is missing", "No, never"};
    p.gold_answer = 2;
    const std::vector<Problem> problems = {p};
    SyntheticPolicy policy(problems, 99, 0.05);
    GoldConsistentValue value(problems);
    KeywordRetriever retriever;
    EngineConfig config = reflection_preset({});
    config.rng_seed = 99;
    return to_dump(run_search(p, {&policy, &value, &retriever}, config));
  }();
  return dump;
}

void BM_SamplePairs(benchmark::State& state) {
  const TreeDump& dump = bench_tree();
  SamplerConfig config;
  config.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sample_pairs(dump, config));
}
BENCHMARK(BM_SamplePairs);

void BM_ReflectionPairs(benchmark::State& state) {
  const TreeDump& dump = bench_tree();
  TemplateReflection reflection;
  ReflectionConfig config;
  config.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(build_reflection_pairs(dump, reflection, config));
}
BENCHMARK(BM_ReflectionPairs);

void BM_TreeDumpJson(benchmark::State& state) {
  const TreeDump& dump = bench_tree();
  for (auto _ : state) benchmark::DoNotOptimize(dump_to_json(dump));
}
BENCHMARK(BM_TreeDumpJson);

void BM_TotalLoss(benchmark::State& state) {
  Rng rng(3);
  LossInputs in;
  in.logp_chosen_policy = -3.1;
  in.logp_rejected_policy = -4.2;
  in.logp_chosen_ref = -3.3;
  in.logp_rejected_ref = -4.0;
  in.v_chosen = 0.6;
  in.v_rejected = -0.2;
  in.q_chosen = 0.7;
  in.q_rejected = -0.1;
  const LossWeights w;
  for (auto _ : state) {
    in.v_chosen = rng.uniform01() * 2 - 1;
    benchmark::DoNotOptimize(total_loss(in, w));
  }
}
BENCHMARK(BM_TotalLoss);

}  // namespace

BENCHMARK_MAIN();
