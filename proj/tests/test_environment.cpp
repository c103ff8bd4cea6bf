#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mmrl/environment.hpp"
#include "oracles.hpp"

using namespace mmrl;

namespace {

EpisodeConfig base_config(const TradingDay* day) {
  EpisodeConfig cfg;
  cfg.day = day;
  cfg.stats = nullptr;
  cfg.feature_set = FeatureSet::from_id(2);
  cfg.reward = RewardKind::UPnLwF;
  cfg.mode = EventMode::time_mode(5);
  cfg.window = 5;
  cfg.warmup = 10;
  return cfg;
}

std::vector<double> midpoints(const TradingDay& day) {
  std::vector<double> m;
  for (const auto& s : day.snapshots) m.push_back(s.midpoint());
  return m;
}

}  // namespace

TEST_CASE("price-event segmentation") {
  SUBCASE("constant midpoint gives a single segment to day end") {
    TradingDay day = oracle::make_flat_day(500, 10000.0);
    auto bounds = segment_price_events(day, 0.0001);
    REQUIRE(bounds.size() == 1);
    CHECK(bounds[0] == 499);
  }
  SUBCASE("per-snapshot trend beyond beta makes every snapshot an event") {
    std::vector<double> mids;
    double m = 10000.0;
    for (int i = 0; i < 100; ++i) {
      mids.push_back(m);
      m = std::round((m * 1.0003) * 2.0) / 2.0;  // > beta, on the tick grid
    }
    TradingDay day = oracle::make_path_day(mids);
    auto bounds = segment_price_events(day, 0.0001);
    CHECK(static_cast<int>(bounds.size()) == 99);
    for (std::size_t k = 0; k < bounds.size(); ++k)
      CHECK(bounds[k] == static_cast<int>(k) + 1);
  }
  SUBCASE("worked three-snapshot example") {
    TradingDay day =
        oracle::make_path_day({10000.0, 10000.5, 10001.5, 10001.5});
    auto bounds = segment_price_events(day, 0.0001);
    // Band 9999..10001 from the first midpoint: 10000.5 stays inside,
    // 10001.5 breaches.
    REQUIRE(!bounds.empty());
    CHECK(bounds[0] == 2);
  }
  SUBCASE("matches the independent scan oracle on random walks") {
    SynthParams p;
    p.snapshots = 3000;
    for (int d = 0; d < 10; ++d) {
      p.seed = 40 + d;
      TradingDay day = synth_day(p);
      CHECK(segment_price_events(day, 0.0001) ==
            oracle::segment_ref(midpoints(day), 0.0001, 0));
      CHECK(segment_price_events(day, 0.0001, 123) ==
            oracle::segment_ref(midpoints(day), 0.0001, 123));
    }
  }
}

TEST_CASE("environment construction and reset") {
  TradingDay day = oracle::make_flat_day(200, 10000.0);
  EpisodeConfig cfg = base_config(&day);

  SUBCASE("day shorter than warm-up is rejected") {
    cfg.warmup = 500;
    CHECK_THROWS_WITH_AS(([&] { Environment e(cfg); })(),
                         doctest::Contains("warm-up"), std::runtime_error);
  }
  SUBCASE("deterministic start sits at the warm-up index") {
    Environment env(cfg);
    env.reset();
    CHECK(env.start_index() == 10);
    CHECK(!env.done());
  }
  SUBCASE("random starts are seeded and leave at least one step") {
    cfg.random_start = true;
    cfg.seed = 9;
    Environment a(cfg);
    Environment b(cfg);
    for (int i = 0; i < 50; ++i) {
      a.reset();
      b.reset();
      CHECK(a.start_index() == b.start_index());
      CHECK(a.start_index() >= 10);
      CHECK(a.start_index() <= static_cast<int>(day.snapshots.size()) - 2);
    }
  }
  SUBCASE("step after done throws") {
    cfg.warmup = 197;
    Environment env(cfg);
    env.reset();
    StepResult r = env.step(1);
    CHECK(r.done);
    CHECK_THROWS_AS(env.step(1), std::runtime_error);
  }
}

TEST_CASE("time-based stepping consumes action_repeats snapshots") {
  TradingDay day = oracle::make_flat_day(200, 10000.0);
  EpisodeConfig cfg = base_config(&day);
  Environment env(cfg);
  env.reset();
  StepResult r = env.step(1);
  CHECK(r.info.snapshots_consumed == 5);
  CHECK(env.cursor() == 15);
  // Observation window advanced by 5 rows as well.
  CHECK(r.observation.window == 5);
  CHECK(r.observation.rows.size() == 5u * 29u);

  SUBCASE("action applies once; repeats are no-ops") {
    // Quote both sides: the order book state after the step shows one
    // placement (queue intact), not five re-placements.
    StepResult q = env.step(6);
    (void)q;
    const auto& ex = env.exchange();
    REQUIRE(ex.open_bid());
    CHECK(ex.open_bid()->level_at_placement == 4);
  }
  SUBCASE("final partial step truncates at day end and flattens") {
    EpisodeConfig c2 = base_config(&day);
    c2.warmup = 197;  // 2 snapshots left: partial step
    Environment e2(c2);
    e2.reset();
    StepResult last = e2.step(1);
    CHECK(last.done);
    CHECK(last.info.snapshots_consumed == 2);
    CHECK(e2.exchange().net_lots() == 0.0);
  }
}

TEST_CASE("price-based stepping ends at the band breach") {
  // Path: flat warm-up, then inside-band moves, then a breach.
  std::vector<double> mids(40, 10000.0);
  mids.push_back(10000.5);  // inside +-1bp band (9999..10001)
  mids.push_back(10001.5);  // breach
  for (int i = 0; i < 10; ++i) mids.push_back(10001.5);
  TradingDay day = oracle::make_path_day(mids);

  EpisodeConfig cfg = base_config(&day);
  cfg.mode = EventMode::price_mode(0.0001);
  cfg.warmup = 39;  // band opens from midpoint 10000: [9999, 10001]
  Environment env(cfg);
  env.reset();
  StepResult r = env.step(1);
  CHECK(env.cursor() == 41);  // stopped on the breaching snapshot
  CHECK(r.info.snapshots_consumed == 2);
  CHECK(!r.done);

  SUBCASE("constant midpoint runs a single step to day end") {
    TradingDay flat = oracle::make_flat_day(300, 10000.0);
    EpisodeConfig c2 = base_config(&flat);
    c2.mode = EventMode::price_mode(0.0001);
    Environment e2(c2);
    e2.reset();
    StepResult one = e2.step(1);
    CHECK(one.done);
    CHECK(one.info.snapshots_consumed == 299 - 10);
  }
}

TEST_CASE("stepper boundaries equal offline segmentation") {
  SynthParams p;
  p.snapshots = 4000;
  for (int d = 0; d < 5; ++d) {
    p.seed = 70 + d;
    TradingDay day = synth_day(p);
    EpisodeConfig cfg = base_config(&day);
    cfg.mode = EventMode::price_mode(0.0001);
    cfg.warmup = 100;
    cfg.window = 1;
    Environment env(cfg);
    env.reset();
    std::vector<int> visited;
    while (!env.done()) {
      env.step(1);
      visited.push_back(env.cursor());
    }
    CHECK(visited == segment_price_events(day, 0.0001, 100));
  }
}

TEST_CASE("step rewards accumulate per underlying snapshot") {
  // Rising path: one long lot held through a time step accrues the summed
  // per-snapshot unrealized PnL changes.
  std::vector<double> mids;
  for (int i = 0; i < 70; ++i) mids.push_back(10000.0 + 0.5 * i);
  TradingDay day = oracle::make_path_day(mids, 0.5, 1, 0.01);
  // Deep aggressive flow so quotes at any level can fill.
  for (std::size_t i = 1; i < day.snapshots.size(); ++i) {
    day.snapshots[i].market_bid[10] = 50000.0;
    day.snapshots[i].market_ask[10] = 50000.0;
    day.snapshots[i].sell_notional = 50000.0;
    day.snapshots[i].buy_notional = 50000.0;
  }
  EpisodeConfig cfg = base_config(&day);
  cfg.reward = RewardKind::UPnL;
  cfg.warmup = 20;
  Environment env(cfg);
  env.reset();

  // No inventory: reward must be 0 regardless of drift.
  StepResult r0 = env.step(1);
  CHECK(r0.reward == 0.0);

  // The reward engine sees inv x dm per snapshot; verify against a direct
  // sum for a scripted long position created via the exchange by a market
  // flatten-free action is impractical here, so check the accounting
  // identity instead: upnl_fills == upnl + rpnl_change summed per step.
  EpisodeConfig a = base_config(&day);
  a.reward = RewardKind::UPnLwF;
  a.warmup = 20;
  EpisodeConfig b = base_config(&day);
  b.reward = RewardKind::RPnLChange;
  b.warmup = 20;
  EpisodeConfig c = base_config(&day);
  c.reward = RewardKind::UPnL;
  c.warmup = 20;
  Environment ea(a), eb(b), ec(c);
  ea.reset();
  eb.reset();
  ec.reset();
  double sum_a = 0.0, sum_b = 0.0, sum_c = 0.0;
  const int script[] = {6, 1, 6, 1, 17, 6, 1, 1};
  for (int action : script) {
    sum_a += ea.step(action).reward;
    sum_b += eb.step(action).reward;
    sum_c += ec.step(action).reward;
    REQUIRE(!ea.done());
  }
  CHECK(std::abs(sum_a - (sum_b + sum_c)) < 1e-12);
  CHECK(ea.exchange().rpnl_total() != 0.0);  // the script actually traded
}

TEST_CASE("episodes are deterministic and end flat") {
  SynthParams p;
  p.seed = 123;
  p.snapshots = 2500;
  p.base_qty = 2.0;
  p.flow_intensity = 60000.0;
  TradingDay day = synth_day(p);

  EpisodeConfig cfg = base_config(&day);
  cfg.warmup = 1800;
  cfg.reward = RewardKind::TradeCompletion;
  cfg.random_start = true;
  cfg.seed = 4;

  auto run = [&] {
    Environment env(cfg);
    env.reset();
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> action(1, 17);
    std::vector<double> rewards;
    while (!env.done()) rewards.push_back(env.step(action(rng)).reward);
    CHECK(env.exchange().net_lots() == 0.0);
    rewards.push_back(env.exchange().rpnl_total());
    return rewards;
  };
  CHECK(run() == run());

  SUBCASE("daily return reconciles with the exchange ledger") {
    Environment env(cfg);
    env.reset();
    StepResult last;
    while (!env.done()) last = env.step(6);
    CHECK(last.info.rpnl_total == env.exchange().rpnl_total());
    CHECK(env.exchange().net_lots() == 0.0);
  }
}
