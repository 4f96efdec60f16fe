#include <benchmark/benchmark.h>

#include "datasets.hpp"
#include "revsent/features.hpp"
#include "revsent/svm.hpp"
#include "revsent/tree.hpp"

namespace {

using namespace revsent;

std::vector<std::string> corpus(std::size_t n) {
  static const std::vector<std::string> words = {"room", "great", "staff", "bad", "view", "slow", "clean",
                                                 "noisy", "breakfast", "lovely", "price", "rude"};
  Rng rng(7);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    const auto len = 10 + rng.uniform_index(40);
    for (std::size_t t = 0; t < len; ++t) text += words[rng.uniform_index(words.size())] + std::to_string(rng.uniform_index(50)) + " ";
    out.push_back(std::move(text));
  }
  return out;
}

void BM_SmoTrain(benchmark::State& state) {
  const auto data = testing::blobs(static_cast<std::size_t>(state.range(0)), 50, 10, 0.5, 1.0, 0.1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(train_svm(data.X, data.y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SmoTrain)->Arg(100)->Arg(400)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TreeTrain(benchmark::State& state) {
  const auto data = testing::blobs(static_cast<std::size_t>(state.range(0)), 200, 20, 0.5, 1.0, 0.1, 4);
  for (auto _ : state) benchmark::DoNotOptimize(train_tree(data.X, data.y));
}
BENCHMARK(BM_TreeTrain)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ForestTrain(benchmark::State& state) {
  const auto data = testing::blobs(100, 2000, 50, 0.5, 1.0, 0.1, 5);
  ForestConfig config;
  config.n_trees = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_forest(data.X, data.y, config));
}
BENCHMARK(BM_ForestTrain)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_TfidfFitTransform(benchmark::State& state) {
  const auto texts = corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    TfidfFeaturizer featurizer(5000);
    featurizer.fit(texts);
    benchmark::DoNotOptimize(featurizer.transform(texts));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TfidfFitTransform)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
