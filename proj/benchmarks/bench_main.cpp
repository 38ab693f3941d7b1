#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "mctd/bench.hpp"
#include "mctd/evaluation.hpp"
#include "mctd/masking.hpp"
#include "mctd/search.hpp"
#include "mctd/uncertainty.hpp"

using namespace mctd;

namespace {

struct Task {
  bench::SyntheticTask task;
  std::vector<std::shared_ptr<Expert>> experts;
};

const Task& task_of_length(std::size_t len) {
  static std::map<std::size_t, Task> cache;
  auto it = cache.find(len);
  if (it == cache.end()) {
    bench::TaskGenParams p;
    p.count = 1;
    p.min_len = p.max_len = len;
    p.seed = 99;
    Task t{bench::generate_tasks(p).front(), {}};
    t.experts = bench::fit_task_experts(t.task, 0).experts;
    it = cache.emplace(len, std::move(t)).first;
  }
  return it->second;
}

void BM_EnsembleSurprisal(benchmark::State& state) {
  const std::size_t E = 3, M = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::vector<std::size_t> idx(M);
  for (std::size_t i = 0; i < M; ++i) idx[i] = i;
  EnsembleProposalSet set{MaskSet(idx), {}};
  for (std::size_t e = 0; e < E; ++e) {
    PositionDistributionSet d{"e" + std::to_string(e), {}};
    for (std::size_t i : idx) {
      ProbabilityVector p(20);
      double s = 0.0;
      for (double& x : p) s += (x = 1.0 + rng() % 100);
      for (double& x : p) x /= s;
      d.entries[i] = p;
    }
    set.per_expert.push_back(d);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ensemble_surprisal(set));
}
BENCHMARK(BM_EnsembleSurprisal)->Arg(4)->Arg(32)->Arg(128);

void BM_EnsembleConfidence(benchmark::State& state) {
  const auto& t = task_of_length(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(confidence_from_ensemble(t.task.baseline, t.experts));
}
BENCHMARK(BM_EnsembleConfidence)->Arg(60)->Arg(120)->Arg(300);

void BM_CompositeReward(benchmark::State& state) {
  const auto& t = task_of_length(static_cast<std::size_t>(state.range(0)));
  const CriticPanel panel = standard_panel(t.task.target, RunConfig{}.reward_weights);
  for (auto _ : state) benchmark::DoNotOptimize(panel(t.task.baseline));
}
BENCHMARK(BM_CompositeReward)->Arg(60)->Arg(120)->Arg(300);

void BM_Search(benchmark::State& state) {
  const auto& t = task_of_length(static_cast<std::size_t>(state.range(0)));
  RunConfig cfg;
  cfg.mode = Mode::multi_expert;
  cfg.E = 3;
  cfg.total_simulations = static_cast<std::size_t>(state.range(1));
  const CriticPanel panel = standard_panel(t.task.target, cfg.reward_weights);
  for (auto _ : state) {
    Search s(cfg, t.task.baseline, t.experts, panel);
    benchmark::DoNotOptimize(s.run());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.total_simulations));
}
BENCHMARK(BM_Search)->Args({60, 30})->Args({120, 30})->Args({120, 100})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
