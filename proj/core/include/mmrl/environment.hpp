#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "mmrl/exchange.hpp"
#include "mmrl/features.hpp"
#include "mmrl/market_data.hpp"
#include "mmrl/rewards.hpp"

namespace mmrl {

enum class EventModeKind { Time, Price };

struct EventMode {
  EventModeKind kind = EventModeKind::Time;
  int action_repeats = 5;  // time mode
  double beta = 0.0001;    // price mode band, one basis point

  static EventMode time_mode(int repeats = 5) {
    return {EventModeKind::Time, repeats, 0.0001};
  }
  static EventMode price_mode(double beta = 0.0001) {
    return {EventModeKind::Price, 1, beta};
  }
};

struct EpisodeConfig {
  const TradingDay* day = nullptr;
  const NormalizationStats* stats = nullptr;  // may be null (raw features)
  FeatureSet feature_set = FeatureSet::from_id(1);
  RewardKind reward = RewardKind::TradeCompletion;
  RewardParams reward_params;
  EventMode mode;
  bool random_start = false;
  std::uint64_t seed = 0;
  ExchangeConfig exchange;
  double daily_pnl_target = 0.01;  // rho
  int window = 100;
  int warmup = 1800;  // snapshots before the first actionable step
};

struct StepInfo {
  double midpoint = 0.0;
  double inventory = 0.0;   // net lots
  double rpnl_total = 0.0;
  int fills = 0;
  int snapshots_consumed = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Offline scan of price-event step boundaries: the snapshot index at which
/// each step starting from `start` would terminate.
std::vector<int> segment_price_events(const TradingDay& day, double beta,
                                      int start = 0);

/// Episodic MDP over one trading day, in time-based or price-based event
/// mode. One instance per rollout worker; never shared mutably.
class Environment {
 public:
  explicit Environment(const EpisodeConfig& cfg);

  Observation reset();
  StepResult step(int action);

  bool done() const { return done_; }
  int cursor() const { return cursor_; }
  int start_index() const { return start_; }
  const ExchangeSim& exchange() const { return exchange_; }
  const EpisodeConfig& config() const { return cfg_; }
  int observation_size() const;
  /// Running mark-to-market equity (realized + unrealized), for drawdown.
  double equity() const;

 private:
  /// Applies one action at the cursor, advances one snapshot, matches fills,
  /// and returns the per-snapshot reward. Sets done_ at day end (after the
  /// forced flatten).
  double advance_once(int action);
  Observation observe();

  EpisodeConfig cfg_;
  FeatureSeries series_;
  ObservationBuilder builder_;
  ExchangeSim exchange_;
  RewardEngine reward_;
  std::mt19937_64 rng_;
  int cursor_ = 0;
  int start_ = 0;
  int last_action_ = 0;
  double last_reward_ = 0.0;
  bool done_ = true;
};

}  // namespace mmrl
