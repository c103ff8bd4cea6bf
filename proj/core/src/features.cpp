#include "mmrl/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mmrl/exchange.hpp"

namespace mmrl {

std::array<double, 2 * kBookLevels> lob_notional(const LobSnapshot& s) {
  std::array<double, 2 * kBookLevels> out;
  for (int i = 0; i < kBookLevels; ++i) {
    out[i] = s.bid_px[i] * s.bid_qty[i];
    out[kBookLevels + i] = s.ask_px[i] * s.ask_qty[i];
  }
  return out;
}

std::array<double, kBookLevels> lob_imbalance(const LobSnapshot& s) {
  std::array<double, kBookLevels> out;
  double cum_bid = 0.0, cum_ask = 0.0;
  for (int i = 0; i < kBookLevels; ++i) {
    cum_bid += s.bid_px[i] * s.bid_qty[i];
    cum_ask += s.ask_px[i] * s.ask_qty[i];
    double denom = cum_ask + cum_bid;
    out[i] = denom > 0.0 ? (cum_ask - cum_bid) / denom : 0.0;
  }
  return out;
}

std::array<double, 6 * kBookLevels> order_flow(const LobSnapshot& s) {
  std::array<double, 6 * kBookLevels> out;
  for (int i = 0; i < kBookLevels; ++i) {
    out[i] = s.cancel_bid[i];
    out[kBookLevels + i] = s.cancel_ask[i];
    out[2 * kBookLevels + i] = s.limit_bid[i];
    out[3 * kBookLevels + i] = s.limit_ask[i];
    out[4 * kBookLevels + i] = s.market_bid[i];
    out[5 * kBookLevels + i] = s.market_ask[i];
  }
  return out;
}

FeatureSeries::FeatureSeries(const TradingDay& day) {
  const int n = static_cast<int>(day.snapshots.size());
  ts_.resize(n);
  mid_.resize(n);
  cum_buy_.assign(n + 1, 0.0);
  cum_sell_.assign(n + 1, 0.0);
  cum_gain_.assign(n + 1, 0.0);
  cum_loss_.assign(n + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    const LobSnapshot& s = day.snapshots[i];
    ts_[i] = s.ts_ms;
    mid_[i] = s.midpoint();
    double gain = 0.0, loss = 0.0;
    if (i > 0) {
      double dm = mid_[i] / mid_[i - 1] - 1.0;
      (dm > 0.0 ? gain : loss) = dm;
    }
    cum_buy_[i + 1] = cum_buy_[i] + s.buy_notional;
    cum_sell_[i + 1] = cum_sell_[i] + s.sell_notional;
    cum_gain_[i + 1] = cum_gain_[i] + gain;
    cum_loss_[i + 1] = cum_loss_[i] + loss;
  }
}

int FeatureSeries::window_begin(int i, std::int64_t window_ms) const {
  auto it = std::lower_bound(ts_.begin(), ts_.begin() + i + 1,
                             ts_[i] - window_ms + 1);
  return static_cast<int>(it - ts_.begin());
}

std::array<double, 3> FeatureSeries::trade_flow_imbalance(int i) const {
  std::array<double, 3> out;
  for (std::size_t w = 0; w < kIndicatorWindowsMs.size(); ++w) {
    int j = window_begin(i, kIndicatorWindowsMs[w]);
    double up = cum_buy_[i + 1] - cum_buy_[j];
    double dwn = cum_sell_[i + 1] - cum_sell_[j];
    out[w] = (up + dwn) > 0.0 ? (up - dwn) / (up + dwn) : 0.0;
  }
  return out;
}

std::array<double, 3> FeatureSeries::custom_rsi(int i) const {
  std::array<double, 3> out;
  for (std::size_t w = 0; w < kIndicatorWindowsMs.size(); ++w) {
    int j = window_begin(i, kIndicatorWindowsMs[w]);
    double gain = cum_gain_[i + 1] - cum_gain_[j];
    double loss = -(cum_loss_[i + 1] - cum_loss_[j]);
    double denom = gain + loss;
    out[w] = denom > 0.0 ? (gain - loss) / denom : 0.0;
  }
  return out;
}

ScalarFeatures scalar_features(const LobSnapshot& current,
                               const LobSnapshot& previous,
                               double last_reward) {
  ScalarFeatures f;
  f.spread = current.spread();
  f.midpoint_log_change =
      std::log(current.midpoint()) - std::log(previous.midpoint());
  f.last_reward = last_reward;
  return f;
}

std::vector<double> env_feature_row(const TradingDay& day,
                                    const FeatureSeries& series, int i,
                                    double last_reward) {
  std::vector<double> row(kEnvFeatureCount);
  const LobSnapshot& s = day.snapshots[i];
  auto notional = lob_notional(s);
  std::copy(notional.begin(), notional.end(), row.begin() + kLobNotionalOffset);
  auto imb = lob_imbalance(s);
  std::copy(imb.begin(), imb.end(), row.begin() + kImbalanceOffset);
  auto flow = order_flow(s);
  std::copy(flow.begin(), flow.end(), row.begin() + kOrderFlowOffset);
  auto tfi = series.trade_flow_imbalance(i);
  std::copy(tfi.begin(), tfi.end(), row.begin() + kTfiOffset);
  auto crsi = series.custom_rsi(i);
  std::copy(crsi.begin(), crsi.end(), row.begin() + kCrsiOffset);
  const LobSnapshot& prev = day.snapshots[i > 0 ? i - 1 : 0];
  ScalarFeatures sc = scalar_features(s, prev, last_reward);
  row[kSpreadFeatureIndex] = sc.spread;
  row[kMidChangeFeatureIndex] = sc.midpoint_log_change;
  row[kRewardFeatureIndex] = sc.last_reward;
  return row;
}

FeatureSet FeatureSet::from_id(int id, bool include_reward) {
  FeatureSet set;
  set.id = id;
  set.include_reward = include_reward;
  set.indicators = true;  // every set carries the indicator group
  switch (id) {
    case 1: set.lob_quantity = true;  set.order_flow = true;  set.lob_imbalance = true;  break;
    case 2: set.lob_quantity = false; set.order_flow = false; set.lob_imbalance = true;  break;
    case 3: set.lob_quantity = true;  set.order_flow = false; set.lob_imbalance = true;  break;
    case 4: set.lob_quantity = true;  set.order_flow = false; set.lob_imbalance = false; break;
    case 5: set.lob_quantity = true;  set.order_flow = true;  set.lob_imbalance = false; break;
    case 6: set.lob_quantity = false; set.order_flow = true;  set.lob_imbalance = false; break;
    default:
      throw std::runtime_error("feature set id must be 1..6");
  }
  return set;
}

std::vector<int> FeatureSet::selected_indices() const {
  std::vector<int> idx;
  if (lob_quantity)
    for (int i = 0; i < 2 * kBookLevels; ++i) idx.push_back(kLobNotionalOffset + i);
  if (lob_imbalance)
    for (int i = 0; i < kBookLevels; ++i) idx.push_back(kImbalanceOffset + i);
  if (order_flow)
    for (int i = 0; i < 6 * kBookLevels; ++i) idx.push_back(kOrderFlowOffset + i);
  if (indicators) {
    for (int i = kTfiOffset; i < kRewardFeatureIndex; ++i) idx.push_back(i);
    if (include_reward) idx.push_back(kRewardFeatureIndex);
  }
  return idx;
}

int FeatureSet::width() const {
  return static_cast<int>(selected_indices().size());
}

AgentStateVector agent_state(const ExchangeSim& ex, double midpoint,
                             int last_action, double daily_pnl_target) {
  AgentStateVector v{};
  const ExchangeConfig& cfg = ex.config();
  v[0] = ex.net_lots() / cfg.max_lots;
  v[1] = ex.rpnl_total() / daily_pnl_target;

  auto avg_price = [](const std::deque<InventoryLot>& lots) {
    double qty = 0.0, notional = 0.0;
    for (const auto& lot : lots) {
      qty += lot.quantity;
      notional += lot.entry_price * lot.quantity;
    }
    return qty > 0.0 ? notional / qty : 0.0;
  };
  double upnl = 0.0;
  if (double p = avg_price(ex.short_lots()); p > 0.0) upnl += p / midpoint - 1.0;
  if (double p = avg_price(ex.long_lots()); p > 0.0) upnl += midpoint / p - 1.0;
  v[2] = upnl;

  if (ex.open_bid()) v[3] = ex.open_bid()->price / midpoint - 1.0;
  if (ex.open_ask()) v[4] = ex.open_ask()->price / midpoint - 1.0;

  auto completion = [&](const std::optional<OpenOrder>& o) {
    if (!o) return 0.0;
    return (o->executed - o->queue_ahead) / (o->queue_ahead + o->size);
  };
  v[5] = completion(ex.open_bid());
  v[6] = completion(ex.open_ask());

  if (last_action >= 1 && last_action <= kActionCount)
    v[7 + last_action - 1] = 1.0;
  return v;
}

void Observation::flatten(double* out) const {
  const int pad = window * width - static_cast<int>(rows.size());
  std::fill(out, out + pad, 0.0);
  std::copy(rows.begin(), rows.end(), out + pad);
  std::copy(agent.begin(), agent.end(), out + window * width);
}

std::vector<double> Observation::flatten() const {
  std::vector<double> out(flat_size());
  flatten(out.data());
  return out;
}

ObservationBuilder::ObservationBuilder(FeatureSet set,
                                       const NormalizationStats* stats,
                                       int window)
    : set_(set), stats_(stats), window_(window),
      indices_(set.selected_indices()) {
  if (window_ < 1) throw std::runtime_error("window must be >= 1");
  if (stats_ && stats_->size() != kEnvFeatureCount)
    throw std::runtime_error("normalization stats length mismatch");
}

void ObservationBuilder::reset() { ring_.clear(); }

void ObservationBuilder::push(const std::vector<double>& full_row) {
  if (full_row.size() != kEnvFeatureCount)
    throw std::runtime_error("feature row length mismatch");
  std::vector<double> sel(indices_.size());
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    const int i = indices_[k];
    if (!stats_) {
      sel[k] = full_row[i];
      continue;
    }
    if (stats_->std[i] == 0.0) {
      sel[k] = 0.0;
      continue;
    }
    double z = (full_row[i] - stats_->mean[i]) / stats_->std[i];
    z = std::clamp(z, -stats_->clip_bound, stats_->clip_bound);
    sel[k] = z;
  }
  ring_.push_back(std::move(sel));
  if (static_cast<int>(ring_.size()) > window_) ring_.pop_front();
}

Observation ObservationBuilder::build(const AgentStateVector& agent) const {
  Observation obs;
  obs.window = window_;
  obs.width = width();
  obs.agent = agent;
  obs.rows.reserve(ring_.size() * obs.width);
  for (const auto& r : ring_) obs.rows.insert(obs.rows.end(), r.begin(), r.end());
  return obs;
}

}  // namespace mmrl
