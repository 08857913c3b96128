#include <benchmark/benchmark.h>

#include "stepsearch/bleu.hpp"
#include "stepsearch/engine.hpp"
#include "stepsearch/mock_oracles.hpp"

using namespace stepsearch;

namespace {

Problem bench_problem() {
  Problem p;
  p.id = "bench";
  p.question =
      "Country R claims full territorial sovereignty over its exclusive economic zone and "
      "demands that foreign aircraft obtain permission before overflying it. Which statement "
      "is correct?";
  p.options = {"The claim is wrong; the coastal state holds only specified sovereign rights",
               "Foreign aircraft must always request permission",
               "The zone belongs to the high seas in every respect",
               "Sovereignty over the zone includes the airspace above it"};
  p.gold_answer = 0;
  return p;
}

void BM_Bleu4(benchmark::State& state) {
  const std::string a =
      "<step><thought>Weighing the options against what the question states before settling "
      "on one, the retrieved passage narrows things down considerably and suggests comparing "
      "each option with the rule just found, discarding clear mismatches.</thought></step>";
  const std::string b =
      "<step><thought>The retrieved passage narrows things down; checking which option it "
      "supports and re-reading the question so that no qualifier changes the conclusion "
      "before an answer is committed.</thought></step>";
  for (auto _ : state) benchmark::DoNotOptimize(bleu4_sym(a, b));
}
BENCHMARK(BM_Bleu4);

void BM_PuctSelect(benchmark::State& state) {
  SearchTree tree(bench_problem(), 0);
  // wide-and-deep tree: a fan of 64 children, each with 64 grandchildren
  for (int i = 0; i < 64; ++i) {
    const NodeId child =
        tree.add_child(tree.root(), Step::thought("t" + std::to_string(i)), 1.0 / 64);
    tree.mutable_node(child).visits = 1 + i % 7;
    tree.mutable_node(child).value_sum = 0.01 * i;
    for (int j = 0; j < 64; ++j) {
      const NodeId grand =
          tree.add_child(child, Step::thought("g" + std::to_string(j)), 1.0 / 64);
      tree.mutable_node(grand).visits = j % 3;
      tree.mutable_node(grand).value_sum = 0.005 * j;
    }
  }
  tree.mutable_node(tree.root()).visits = 512;
  EngineConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(select_leaf(tree, config));
}
BENCHMARK(BM_PuctSelect);

void BM_RunSearch40(benchmark::State& state) {
  const Problem problem = bench_problem();
  const std::vector<Problem> problems = {problem};
  EngineConfig config;
  config.simulations = 40;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    SyntheticPolicy policy(problems, seed, 0.05);
    GoldConsistentValue value(problems);
    KeywordRetriever retriever;
    config.rng_seed = seed++;
    benchmark::DoNotOptimize(run_search(problem, {&policy, &value, &retriever}, config));
  }
}
BENCHMARK(BM_RunSearch40);

}  // namespace
