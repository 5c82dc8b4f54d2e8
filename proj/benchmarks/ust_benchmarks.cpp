#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "ust/cotracker.hpp"
#include "ust/knn_store.hpp"
#include "ust/simulator.hpp"

namespace {

ust::KnnStore random_store(std::size_t size, std::size_t dim, bool budgeting) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  ust::KnnConfig cfg;
  cfg.budgeting = budgeting;
  ust::KnnStore store(dim, cfg);
  for (std::size_t i = 0; i < size; ++i) {
    std::vector<double> x(dim);
    for (double& v : x) v = g(rng);
    store.insert(ust::FeatureVector(x), x[0] > 0 ? ust::Label::kPositive : ust::Label::kNegative,
                 0);
  }
  return store;
}

void BM_KnnScore(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const ust::KnnStore store = random_store(size, 20, false);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> queries(256, std::vector<double>(20));
  for (auto& q : queries) {
    for (double& v : q) v = g(rng);
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.score(queries[i++ % queries.size()]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_KnnScore)->Arg(100)->Arg(1000)->Arg(10000);

void BM_BudgetCycle(benchmark::State& state) {
  ust::KnnStore store = random_store(1000, 20, true);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  int frame = 1;
  for (auto _ : state) {
    for (int j = 0; j < 10; ++j) {
      std::vector<double> x(20);
      for (double& v : x) v = g(rng);
      store.insert(ust::FeatureVector(x), x[0] > 0 ? ust::Label::kPositive : ust::Label::kNegative,
                   frame);
    }
    store.tick();
    store.prune();
    ++frame;
  }
  state.counters["store"] = static_cast<double>(store.size());
}
BENCHMARK(BM_BudgetCycle);

void BM_TrackerStep(benchmark::State& state) {
  const auto variant = static_cast<ust::Variant>(state.range(0));
  ust::Scenario scenario(ust::extended(ust::builtin_scenario("plain"), 100000));
  ust::TrackerConfig cfg;
  cfg.budget_cap = 1000;
  auto tracker = ust::CoTracker::init(scenario, scenario.ground_truth(0).box, cfg, variant, 1);
  int t = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tracker.step(t++));
  }
  state.SetLabel(std::string(ust::to_string(variant)));
  state.counters["fps"] = benchmark::Counter(static_cast<double>(state.iterations()),
                                             benchmark::Counter::kIsRate);
}
BENCHMARK(BM_TrackerStep)
    ->Arg(static_cast<int>(ust::Variant::kUst))
    ->Arg(static_cast<int>(ust::Variant::kKnnBudgetedOnly))
    ->Arg(static_cast<int>(ust::Variant::kOracleOnly))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
