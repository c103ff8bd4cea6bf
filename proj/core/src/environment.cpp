#include "mmrl/environment.hpp"

#include <stdexcept>

namespace mmrl {

std::vector<int> segment_price_events(const TradingDay& day, double beta,
                                      int start) {
  const int n = static_cast<int>(day.snapshots.size());
  std::vector<double> mid(n);
  for (int i = 0; i < n; ++i) mid[i] = day.snapshots[i].midpoint();

  std::vector<int> boundaries;
  int i = start;
  while (i < n - 1) {
    const double upper = mid[i] * (1.0 + beta);
    const double lower = mid[i] * (1.0 - beta);
    int j = i + 1;
    while (j < n - 1 && mid[j] >= lower && mid[j] <= upper) ++j;
    boundaries.push_back(j);
    i = j;
  }
  return boundaries;
}

Environment::Environment(const EpisodeConfig& cfg)
    : cfg_(cfg),
      series_(*cfg.day),
      builder_(cfg.feature_set, cfg.stats, cfg.window),
      exchange_(cfg.exchange),
      reward_(cfg.reward, cfg.reward_params),
      rng_(cfg.seed) {
  if (!cfg_.day) throw std::runtime_error("environment: no trading day");
  const int n = static_cast<int>(cfg_.day->snapshots.size());
  if (cfg_.warmup < 0 || cfg_.warmup >= n - 1)
    throw std::runtime_error("environment: day shorter than warm-up");
  if (cfg_.mode.kind == EventModeKind::Time && cfg_.mode.action_repeats < 1)
    throw std::runtime_error("environment: action_repeats must be >= 1");
  if (cfg_.mode.kind == EventModeKind::Price && cfg_.mode.beta <= 0.0)
    throw std::runtime_error("environment: beta must be > 0");
}

Observation Environment::reset() {
  exchange_.reset();
  reward_.reset();
  builder_.reset();
  done_ = false;
  last_action_ = 0;
  last_reward_ = 0.0;

  const int n = static_cast<int>(cfg_.day->snapshots.size());
  if (cfg_.random_start) {
    std::uniform_int_distribution<int> dist(cfg_.warmup, n - 2);
    start_ = dist(rng_);
  } else {
    start_ = cfg_.warmup;
  }
  cursor_ = start_;
  builder_.push(env_feature_row(*cfg_.day, series_, cursor_, 0.0));
  return observe();
}

double Environment::advance_once(int action) {
  const int n = static_cast<int>(cfg_.day->snapshots.size());
  exchange_.begin_snapshot();
  exchange_.apply_action(action, cfg_.day->snapshots[cursor_]);
  ++cursor_;
  exchange_.match(cfg_.day->snapshots[cursor_]);
  if (cursor_ == n - 1) {
    // Day end: forced flatten is part of the final reward context.
    exchange_.flatten_all(cfg_.day->snapshots[cursor_]);
    done_ = true;
  }

  const LobSnapshot& s = cfg_.day->snapshots[cursor_];
  RewardContext ctx;
  ctx.inv = exchange_.net_lots();
  ctx.dm = series_.midpoint(cursor_) / series_.midpoint(cursor_ - 1) - 1.0;
  ctx.rpnl_step = exchange_.rpnl_step();
  ctx.rpnl_total = exchange_.rpnl_total();
  ctx.rpnl_prev = ctx.rpnl_total - ctx.rpnl_step;
  ctx.matched_count = exchange_.executions_this_snapshot();
  ctx.half_spread = s.midpoint() / s.bid_px[0] - 1.0;
  ctx.upnl = ctx.inv * ctx.dm;

  const double r = reward_(ctx);
  last_reward_ = r;
  builder_.push(env_feature_row(*cfg_.day, series_, cursor_, r));
  return r;
}

StepResult Environment::step(int action) {
  if (done_) throw std::runtime_error("environment: step after done");
  last_action_ = action;

  StepResult res;
  int fills = 0;
  double total = 0.0;
  int consumed = 0;

  if (cfg_.mode.kind == EventModeKind::Time) {
    total += advance_once(action);
    fills += exchange_.fills_this_snapshot();
    ++consumed;
    for (int k = 1; k < cfg_.mode.action_repeats && !done_; ++k) {
      total += advance_once(1);
      fills += exchange_.fills_this_snapshot();
      ++consumed;
    }
  } else {
    const double m_ref = series_.midpoint(cursor_);
    const double upper = m_ref * (1.0 + cfg_.mode.beta);
    const double lower = m_ref * (1.0 - cfg_.mode.beta);
    total += advance_once(action);
    fills += exchange_.fills_this_snapshot();
    ++consumed;
    while (!done_) {
      const double m = series_.midpoint(cursor_);
      if (m < lower || m > upper) break;  // step ends at the breach
      total += advance_once(1);
      fills += exchange_.fills_this_snapshot();
      ++consumed;
    }
  }

  res.observation = observe();
  res.reward = total;
  res.done = done_;
  res.info.midpoint = series_.midpoint(cursor_);
  res.info.inventory = exchange_.net_lots();
  res.info.rpnl_total = exchange_.rpnl_total();
  res.info.fills = fills;
  res.info.snapshots_consumed = consumed;
  return res;
}

Observation Environment::observe() {
  AgentStateVector agent =
      agent_state(exchange_, series_.midpoint(cursor_), last_action_,
                  cfg_.daily_pnl_target);
  return builder_.build(agent);
}

int Environment::observation_size() const {
  return builder_.window() * builder_.width() + kAgentStateSize;
}

double Environment::equity() const {
  return exchange_.rpnl_total() + exchange_.unrealized_at(series_.midpoint(cursor_));
}

}  // namespace mmrl
