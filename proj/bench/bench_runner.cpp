// OpenMP cell grid against the serial reference on the same experiments.
// With one core the two should be within noise of each other.

#include <benchmark/benchmark.h>

#include "prolearn/eval.hpp"

using namespace prolearn;

namespace {

ExperimentConfig markov_grid(int seeds) {
  ExperimentConfig c;
  c.scenario = "bench";
  c.process = ProcessSpec{TwoStateMarkov{0.1, 0.1}, 1, 2000};
  c.learner.kind = LearnerKind::markov_mle;
  c.gamma = 0.9;
  c.cutoffs = {10, 20, 50, 100, 200, 500, 1000};
  for (int s = 0; s < seeds; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
  return c;
}

ExperimentConfig small_mlp_grid() {
  ExperimentConfig c;
  c.scenario = "bench";
  c.process = ProcessSpec{PeriodicTasks{{Flip1D{1}, Flip1D{2}}, 20}, 20, 1000};
  c.learner.kind = LearnerKind::prospective_erm;
  c.learner.train.hidden = {16};
  c.learner.train.epochs = 5;
  c.learner.embed.d = 10;
  c.cutoffs = {50, 100, 200};
  c.seeds = {0, 1};
  return c;
}

void BM_markov_parallel(benchmark::State& state) {
  auto cfg = markov_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg));
}

void BM_markov_serial(benchmark::State& state) {
  auto cfg = markov_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment_serial(cfg));
}

void BM_mlp_parallel(benchmark::State& state) {
  auto cfg = small_mlp_grid();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg));
}

void BM_mlp_serial(benchmark::State& state) {
  auto cfg = small_mlp_grid();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment_serial(cfg));
}

}  // namespace

BENCHMARK(BM_markov_parallel)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_markov_serial)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mlp_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mlp_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
