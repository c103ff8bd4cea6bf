#include "mmrl/exchange.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mmrl {
namespace {

constexpr double kUnitEps = 1e-9;

constexpr int kBidLevels[15] = {0, 0, 0, 4, 4, 4, 4, 9, 9, 9, 9, 14, 14, 14, 14};
constexpr int kAskLevels[15] = {4, 9, 14, 0, 4, 9, 14, 0, 4, 9, 14, 0, 4, 9, 14};

}  // namespace

ActionSpec decode_action(int action_id) {
  ActionSpec spec;
  if (action_id == 1) {
    spec.noop = true;
  } else if (action_id >= 2 && action_id <= 16) {
    spec.bid_level = kBidLevels[action_id - 2];
    spec.ask_level = kAskLevels[action_id - 2];
  } else if (action_id == 17) {
    spec.flatten = true;
  } else {
    throw std::runtime_error("unknown action id " + std::to_string(action_id));
  }
  return spec;
}

ExchangeSim::ExchangeSim(const ExchangeConfig& cfg) : cfg_(cfg) {
  if (cfg_.order_size <= 0.0 || cfg_.max_lots < 1)
    throw std::runtime_error("invalid exchange config");
}

void ExchangeSim::reset() {
  open_bid_.reset();
  open_ask_.reset();
  longs_.clear();
  shorts_.clear();
  rpnl_total_ = rpnl_step_ = 0.0;
  executions_ = fills_this_snapshot_ = 0;
  current_action_ = 1;
  trade_log_.clear();
}

void ExchangeSim::begin_snapshot() {
  rpnl_step_ = 0.0;
  executions_ = 0;
  fills_this_snapshot_ = 0;
}

double ExchangeSim::long_units() const {
  double u = 0.0;
  for (const auto& lot : longs_) u += lot.quantity;
  return u;
}

double ExchangeSim::short_units() const {
  double u = 0.0;
  for (const auto& lot : shorts_) u += lot.quantity;
  return u;
}

double ExchangeSim::net_lots() const {
  return (long_units() - short_units()) / cfg_.order_size;
}

double ExchangeSim::unrealized_at(double midpoint) const {
  double u = 0.0;
  for (const auto& lot : longs_)
    u += lot.quantity / cfg_.order_size * (midpoint / lot.entry_price - 1.0);
  for (const auto& lot : shorts_)
    u += lot.quantity / cfg_.order_size * (lot.entry_price / midpoint - 1.0);
  return u;
}

bool ExchangeSim::side_at_capacity(Side side) const {
  const double cap = cfg_.max_lots * cfg_.order_size * (1.0 + 1e-12);
  if (side == Side::Bid) {
    if (short_units() > kUnitEps) return false;  // a buy would net, not extend
    return long_units() + cfg_.order_size > cap ||
           static_cast<int>(longs_.size()) >= cfg_.max_lots;
  }
  if (long_units() > kUnitEps) return false;
  return short_units() + cfg_.order_size > cap ||
         static_cast<int>(shorts_.size()) >= cfg_.max_lots;
}

void ExchangeSim::apply_action(int action_id, const LobSnapshot& s) {
  current_action_ = action_id;
  ActionSpec spec = decode_action(action_id);
  if (spec.noop) return;
  if (spec.flatten) {
    flatten_all(s);
    return;
  }
  if (spec.bid_level >= 0) place_or_modify(Side::Bid, spec.bid_level, s);
  if (spec.ask_level >= 0) place_or_modify(Side::Ask, spec.ask_level, s);
}

void ExchangeSim::place_or_modify(Side side, int level, const LobSnapshot& s) {
  level = std::clamp(level, 0, kBookLevels - 1);
  const double price = side == Side::Bid ? s.bid_px[level] : s.ask_px[level];
  auto& slot = side == Side::Bid ? open_bid_ : open_ask_;
  if (slot && slot->price == price) return;  // same price keeps queue priority
  if (slot) cancel_order(side, s);
  if (side_at_capacity(side)) return;  // suppressed at quote time
  OpenOrder order;
  order.side = side;
  order.price = price;
  order.size = cfg_.order_size;
  order.queue_ahead =
      price * (side == Side::Bid ? s.bid_qty[level] : s.ask_qty[level]);
  order.executed = 0.0;
  order.level_at_placement = level;
  slot = order;
}

void ExchangeSim::cancel_order(Side side, const LobSnapshot& s) {
  auto& slot = side == Side::Bid ? open_bid_ : open_ask_;
  if (!slot) return;
  // Partially executed units convert to inventory at the executed price.
  if (slot->executed > kUnitEps) {
    double qty = slot->executed;
    double price = slot->price;
    slot.reset();
    net_fill(side, price, qty, cfg_.fees.maker, s.ts_ms);
    record_fill(side, price, qty, /*maker=*/true, cfg_.fees.maker, s.ts_ms);
  } else {
    slot.reset();
  }
}

void ExchangeSim::match(const LobSnapshot& s) {
  match_side(open_bid_, s);
  match_side(open_ask_, s);
}

void ExchangeSim::match_side(std::optional<OpenOrder>& order,
                             const LobSnapshot& s) {
  if (!order) return;
  // Aggressive flow at or through the order price.
  double eligible = 0.0;
  if (order->side == Side::Bid) {
    for (int i = 0; i < kBookLevels; ++i)
      if (s.bid_px[i] <= order->price) eligible += s.market_bid[i];
  } else {
    for (int i = 0; i < kBookLevels; ++i)
      if (s.ask_px[i] >= order->price) eligible += s.market_ask[i];
  }
  if (eligible <= 0.0) return;

  const double take = std::min(order->queue_ahead, eligible);
  order->queue_ahead -= take;
  double remainder = eligible - take;
  if (remainder <= 0.0) return;

  const double fill_units =
      std::min(order->size - order->executed, remainder / order->price);
  order->executed += fill_units;
  if (order->executed + kUnitEps < order->size) return;

  // Completed order: all fills were at the limit price, so the average
  // execution price is the order price.
  const Side side = order->side;
  const double price = order->price;
  const double qty = order->size;
  order.reset();
  ++executions_;
  net_fill(side, price, qty, cfg_.fees.maker, s.ts_ms);
  record_fill(side, price, qty, /*maker=*/true, cfg_.fees.maker, s.ts_ms);
}

void ExchangeSim::net_fill(Side side, double price, double qty,
                           double fee_rate, std::int64_t ts) {
  auto& opposite = side == Side::Bid ? shorts_ : longs_;
  while (qty > kUnitEps && !opposite.empty()) {
    InventoryLot& lot = opposite.front();
    const double q = std::min(qty, lot.quantity);
    const double pnl_frac = side == Side::Bid
                                ? lot.entry_price / price - 1.0   // cover short
                                : price / lot.entry_price - 1.0;  // sell long
    const double realized =
        q / cfg_.order_size * (pnl_frac - lot.entry_fee_rate - fee_rate);
    rpnl_step_ += realized;
    rpnl_total_ += realized;
    lot.quantity -= q;
    qty -= q;
    if (lot.quantity <= kUnitEps) opposite.pop_front();
  }
  if (qty > kUnitEps) {
    auto& same = side == Side::Bid ? longs_ : shorts_;
    same.push_back({side, price, qty, ts, fee_rate});
  }
}

void ExchangeSim::record_fill(Side side, double price, double qty, bool maker,
                              double fee_rate, std::int64_t ts) {
  ++fills_this_snapshot_;
  Fill f;
  f.ts_ms = ts;
  f.action_id = current_action_;
  f.side = side;
  f.price = price;
  f.quantity = qty;
  f.maker = maker;
  f.fee_rate = fee_rate;
  f.rpnl_step_after = rpnl_step_;
  f.inventory_after = net_lots();
  trade_log_.push_back(f);
}

void ExchangeSim::flatten_all(const LobSnapshot& s) {
  cancel_order(Side::Bid, s);
  cancel_order(Side::Ask, s);
  const double m = s.midpoint();
  double sell_px = m;
  while (!longs_.empty()) {
    sell_px *= 1.0 - cfg_.slippage;
    const double qty = longs_.front().quantity;
    net_fill(Side::Ask, sell_px, qty, cfg_.fees.taker, s.ts_ms);
    record_fill(Side::Ask, sell_px, qty, /*maker=*/false, cfg_.fees.taker,
                s.ts_ms);
  }
  double buy_px = m;
  while (!shorts_.empty()) {
    buy_px *= 1.0 + cfg_.slippage;
    const double qty = shorts_.front().quantity;
    net_fill(Side::Bid, buy_px, qty, cfg_.fees.taker, s.ts_ms);
    record_fill(Side::Bid, buy_px, qty, /*maker=*/false, cfg_.fees.taker,
                s.ts_ms);
  }
}

void ExchangeSim::write_trade_log_csv(const std::vector<Fill>& log,
                                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "ts_ms,action_id,side,price,qty,role,fee,rpnl_step,inventory_after\n";
  char buf[256];
  for (const Fill& f : log) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%s,%.17g,%.17g,%s,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(f.ts_ms), f.action_id,
                  f.side == Side::Bid ? "buy" : "sell", f.price, f.quantity,
                  f.maker ? "maker" : "taker", f.fee_rate, f.rpnl_step_after,
                  f.inventory_after);
    out << buf;
  }
}

}  // namespace mmrl
