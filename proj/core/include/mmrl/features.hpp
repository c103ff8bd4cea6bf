#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <vector>

#include "mmrl/market_data.hpp"

namespace mmrl {

// Layout of the full environment feature row.
inline constexpr int kLobNotionalOffset = 0;     // 40: bid 0..19, ask 0..19
inline constexpr int kImbalanceOffset = 40;      // 20
inline constexpr int kOrderFlowOffset = 60;      // 120: C/L/M x bid/ask x 20
inline constexpr int kTfiOffset = 180;           // 3 (5/15/30 min)
inline constexpr int kCrsiOffset = 183;          // 3 (5/15/30 min)
inline constexpr int kSpreadFeatureIndex = 186;
inline constexpr int kMidChangeFeatureIndex = 187;
inline constexpr int kRewardFeatureIndex = 188;
inline constexpr int kEnvFeatureCount = 189;

inline constexpr std::array<std::int64_t, 3> kIndicatorWindowsMs = {
    300'000, 900'000, 1'800'000};

/// Price x quantity per level, bids 0..19 then asks 0..19.
std::array<double, 2 * kBookLevels> lob_notional(const LobSnapshot& s);

/// Depth-cumulative notional imbalance per level:
/// (cumAsk_i - cumBid_i) / (cumAsk_i + cumBid_i), in [-1, 1].
std::array<double, kBookLevels> lob_imbalance(const LobSnapshot& s);

/// Cancel/limit/market flow notionals in fixed order:
/// C bid, C ask, L bid, L ask, M bid, M ask (20 each).
std::array<double, 6 * kBookLevels> order_flow(const LobSnapshot& s);

/// Precomputed per-day prefix sums so the windowed indicators are O(log n)
/// per snapshot. Immutable after construction.
class FeatureSeries {
 public:
  explicit FeatureSeries(const TradingDay& day);

  int size() const { return static_cast<int>(ts_.size()); }
  double midpoint(int i) const { return mid_[i]; }

  /// (UP - DWN) / (UP + DWN) over each wall-clock window ending at i;
  /// 0 when the window saw no trades.
  std::array<double, 3> trade_flow_imbalance(int i) const;

  /// (gain - |loss|) / (gain + |loss|) over simple midpoint returns in each
  /// window; 0 when the midpoint never moved.
  std::array<double, 3> custom_rsi(int i) const;

 private:
  int window_begin(int i, std::int64_t window_ms) const;

  std::vector<std::int64_t> ts_;
  std::vector<double> mid_;
  // Prefix sums indexed so that prefix[i+1]-prefix[j] sums entries j..i.
  std::vector<double> cum_buy_, cum_sell_, cum_gain_, cum_loss_;
};

struct ScalarFeatures {
  double spread;
  double midpoint_log_change;
  double last_reward;
};

/// Spread (ask - bid), log midpoint change, and the reward passthrough.
ScalarFeatures scalar_features(const LobSnapshot& current,
                               const LobSnapshot& previous, double last_reward);

/// Full 189-entry environment feature row for snapshot `i` of a day.
std::vector<double> env_feature_row(const TradingDay& day,
                                    const FeatureSeries& series, int i,
                                    double last_reward);

/// One of the six observation-space group selections.
struct FeatureSet {
  int id = 1;
  bool lob_quantity = true;
  bool order_flow = true;
  bool lob_imbalance = true;
  bool indicators = true;
  bool include_reward = true;  // reward passthrough inside the indicator group

  static FeatureSet from_id(int id, bool include_reward = true);
  int width() const;
  /// Indices into the full 189-entry row, in layout order.
  std::vector<int> selected_indices() const;
};

inline constexpr int kActionCount = 17;
inline constexpr int kAgentStateSize = 24;

/// Net inventory ratio, scaled realized PnL, netted unrealized PnL, open
/// order distances, order completion ratios, and the one-hot last action.
using AgentStateVector = std::array<double, kAgentStateSize>;

class ExchangeSim;  // exchange.hpp

AgentStateVector agent_state(const ExchangeSim& ex, double midpoint,
                             int last_action, double daily_pnl_target);

/// Stacked window of selected + normalized environment features plus the
/// current agent state.
struct Observation {
  int window = 0;   // w
  int width = 0;    // D
  std::vector<double> rows;  // w x D row-major, oldest first, zero-padded
  AgentStateVector agent{};

  int flat_size() const { return window * width + kAgentStateSize; }
  void flatten(double* out) const;
  std::vector<double> flatten() const;
};

/// Owns the ring of normalized selected feature rows for one environment
/// instance (single writer).
class ObservationBuilder {
 public:
  ObservationBuilder(FeatureSet set, const NormalizationStats* stats,
                     int window);

  void reset();
  /// Selects, normalizes, and appends one full environment feature row.
  void push(const std::vector<double>& full_row);
  Observation build(const AgentStateVector& agent) const;

  int width() const { return static_cast<int>(indices_.size()); }
  int window() const { return window_; }

 private:
  FeatureSet set_;
  const NormalizationStats* stats_;
  int window_;
  std::vector<int> indices_;
  std::deque<std::vector<double>> ring_;
};

}  // namespace mmrl
