#include <benchmark/benchmark.h>

#include <random>

#include "mmrl/environment.hpp"

namespace {

void BM_EnvStep(benchmark::State& state) {
  mmrl::SynthParams p;
  p.seed = 3;
  p.snapshots = 20000;
  p.base_qty = 2.0;
  p.flow_intensity = 60000.0;
  const mmrl::TradingDay day = mmrl::synth_day(p);

  mmrl::EpisodeConfig cfg;
  cfg.day = &day;
  cfg.feature_set = mmrl::FeatureSet::from_id(2);
  cfg.window = 25;
  cfg.warmup = 1800;
  mmrl::Environment env(cfg);
  env.reset();
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> action(1, 17);
  for (auto _ : state) {
    if (env.done()) env.reset();
    benchmark::DoNotOptimize(env.step(action(rng)).reward);
  }
}
BENCHMARK(BM_EnvStep);

}  // namespace
