#include "mmrl/rewards.hpp"

#include <algorithm>
#include <cmath>

namespace mmrl {

double upnl(const RewardContext& ctx) { return ctx.inv * ctx.dm; }

double upnl_with_fills(const RewardContext& ctx) {
  return upnl(ctx) + ctx.rpnl_step;
}

double asym(const RewardContext& ctx, const RewardParams& params) {
  const double psi = ctx.matched_count * ctx.half_spread;
  return std::min(0.0, params.eta_damp * ctx.upnl) + ctx.rpnl_step + psi;
}

double asym_ceiling(const RewardContext& ctx, const RewardParams& params) {
  return std::min(0.0, params.eta_damp * ctx.upnl) +
         std::min(ctx.rpnl_step, params.kappa);
}

double realized_pnl_change(const RewardContext& ctx) {
  return ctx.rpnl_total - ctx.rpnl_prev;
}

double trade_completion(const RewardContext& ctx, const RewardParams& params) {
  if (ctx.rpnl_step >= params.epsilon_tc * params.varpi) return 1.0;
  if (ctx.rpnl_step <= -params.varpi) return -1.0;
  return ctx.rpnl_step;
}

double differential_sharpe(const RewardContext& ctx, DsrState& state) {
  const double r = ctx.upnl;
  const double da = r - state.a;
  const double db = r * r - state.b;
  const double variance = state.b - state.a * state.a;
  double dsr = 0.0;
  if (variance > 1e-12) {
    dsr = (state.b * da - 0.5 * state.a * db) / std::pow(variance, 1.5);
  }
  state.a += state.eta * da;
  state.b += state.eta * db;
  return dsr;
}

const std::vector<std::string>& reward_names() {
  static const std::vector<std::string> names = {
      "upnl",        "upnl_fills", "asym", "asym_ceiling",
      "rpnl_change", "trade_completion", "dsr"};
  return names;
}

std::optional<RewardKind> parse_reward_name(const std::string& name) {
  if (name == "upnl") return RewardKind::UPnL;
  if (name == "upnl_fills") return RewardKind::UPnLwF;
  if (name == "asym") return RewardKind::Asym;
  if (name == "asym_ceiling") return RewardKind::AsymCeiling;
  if (name == "rpnl_change") return RewardKind::RPnLChange;
  if (name == "trade_completion") return RewardKind::TradeCompletion;
  if (name == "dsr") return RewardKind::DSR;
  return std::nullopt;
}

std::string reward_name(RewardKind kind) {
  return reward_names()[static_cast<int>(kind)];
}

double RewardEngine::operator()(const RewardContext& ctx) {
  switch (kind_) {
    case RewardKind::UPnL: return upnl(ctx);
    case RewardKind::UPnLwF: return upnl_with_fills(ctx);
    case RewardKind::Asym: return asym(ctx, params_);
    case RewardKind::AsymCeiling: return asym_ceiling(ctx, params_);
    case RewardKind::RPnLChange: return realized_pnl_change(ctx);
    case RewardKind::TradeCompletion: return trade_completion(ctx, params_);
    case RewardKind::DSR: return differential_sharpe(ctx, dsr_);
  }
  return 0.0;
}

}  // namespace mmrl
