#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mmrl {

/// Everything any of the seven reward functions needs for one step.
struct RewardContext {
  double inv = 0.0;         // signed inventory lot count
  double dm = 0.0;          // fractional midpoint change m_t/m_{t-1} - 1
  double rpnl_step = 0.0;   // realized PnL this step (fraction, net of fees)
  double rpnl_total = 0.0;  // cumulative realized PnL
  double rpnl_prev = 0.0;   // cumulative realized PnL at previous step
  int matched_count = 0;    // completed limit orders this step
  double half_spread = 0.0; // m / p_bid - 1
  double upnl = 0.0;        // inv * dm
};

/// Online Sharpe accumulators; owned by one environment instance.
struct DsrState {
  double a = 0.0;
  double b = 0.0;
  double eta = 0.01;
};

struct RewardParams {
  double eta_damp = 0.35;    // asymmetric dampening
  double kappa = 0.0015;     // realized-gain ceiling (2x taker fee)
  double epsilon_tc = 2.0;   // trade-completion upper multiplier
  double varpi = 0.00075;    // trade-completion threshold (taker fee)
};

double upnl(const RewardContext& ctx);
double upnl_with_fills(const RewardContext& ctx);
double asym(const RewardContext& ctx, const RewardParams& params);
double asym_ceiling(const RewardContext& ctx, const RewardParams& params);
double realized_pnl_change(const RewardContext& ctx);
double trade_completion(const RewardContext& ctx, const RewardParams& params);
/// Online Sharpe step: returns the differential ratio and advances the
/// accumulators. Returns 0 (still updating state) while the variance
/// estimate is degenerate.
double differential_sharpe(const RewardContext& ctx, DsrState& state);

enum class RewardKind {
  UPnL,
  UPnLwF,
  Asym,
  AsymCeiling,
  RPnLChange,
  TradeCompletion,
  DSR,
};

const std::vector<std::string>& reward_names();
std::optional<RewardKind> parse_reward_name(const std::string& name);
std::string reward_name(RewardKind kind);

/// Dispatcher bundling params and the DSR accumulators.
class RewardEngine {
 public:
  RewardEngine(RewardKind kind, RewardParams params = {})
      : kind_(kind), params_(params) {}

  void reset() { dsr_ = DsrState{}; }
  double operator()(const RewardContext& ctx);
  RewardKind kind() const { return kind_; }
  const RewardParams& params() const { return params_; }

 private:
  RewardKind kind_;
  RewardParams params_;
  DsrState dsr_;
};

}  // namespace mmrl
