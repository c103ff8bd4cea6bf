#include <benchmark/benchmark.h>

#include "mmrl/features.hpp"
#include "mmrl/market_data.hpp"

namespace {

mmrl::TradingDay bench_day() {
  mmrl::SynthParams p;
  p.seed = 1;
  p.snapshots = 5000;
  return mmrl::synth_day(p);
}

void BM_FeatureRow(benchmark::State& state) {
  const mmrl::TradingDay day = bench_day();
  mmrl::FeatureSeries series(day);
  int i = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mmrl::env_feature_row(day, series, i, 0.0));
    if (++i >= 4999) i = 100;
  }
}
BENCHMARK(BM_FeatureRow);

void BM_Normalize(benchmark::State& state) {
  const mmrl::TradingDay day = bench_day();
  mmrl::FeatureSeries series(day);
  mmrl::NormalizationStats stats;
  stats.mean.assign(mmrl::kEnvFeatureCount, 0.1);
  stats.std.assign(mmrl::kEnvFeatureCount, 2.0);
  const std::vector<double> row = mmrl::env_feature_row(day, series, 100, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(mmrl::normalize(stats, row));
}
BENCHMARK(BM_Normalize);

}  // namespace
