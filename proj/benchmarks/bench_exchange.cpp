#include <benchmark/benchmark.h>

#include <random>

#include "mmrl/exchange.hpp"
#include "mmrl/market_data.hpp"

namespace {

void BM_ExchangeSnapshot(benchmark::State& state) {
  mmrl::SynthParams p;
  p.seed = 2;
  p.snapshots = 5000;
  p.base_qty = 2.0;
  p.flow_intensity = 60000.0;
  const mmrl::TradingDay day = mmrl::synth_day(p);

  mmrl::ExchangeSim ex;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> action(1, 17);
  std::size_t i = 0;
  for (auto _ : state) {
    ex.begin_snapshot();
    ex.apply_action(action(rng), day.snapshots[i]);
    ex.match(day.snapshots[i + 1]);
    if (++i >= day.snapshots.size() - 2) {
      ex.begin_snapshot();
      ex.flatten_all(day.snapshots.back());
      i = 0;
    }
    benchmark::DoNotOptimize(ex.rpnl_total());
  }
}
BENCHMARK(BM_ExchangeSnapshot);

}  // namespace
