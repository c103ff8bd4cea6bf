#pragma once

// Independent reference implementations (oracles) used by the tests. These
// are deliberately written straight-line, with different code shape from the
// library, so agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "mmrl/exchange.hpp"
#include "mmrl/market_data.hpp"
#include "mmrl/rewards.hpp"

namespace oracle {

// ---------------------------------------------------------------- book/data

// Symmetric book around a midpoint on a tick grid; quantities constant.
inline mmrl::LobSnapshot make_book(double mid, double tick, int hs_ticks,
                                   double qty, std::int64_t ts_ms = 0) {
  mmrl::LobSnapshot s;
  s.ts_ms = ts_ms;
  for (int i = 0; i < mmrl::kBookLevels; ++i) {
    s.bid_px[i] = mid - hs_ticks * tick - i * tick;
    s.ask_px[i] = mid + hs_ticks * tick + i * tick;
    s.bid_qty[i] = qty;
    s.ask_qty[i] = qty;
  }
  return s;
}

// Flat day of n identical snapshots, 1-second cadence.
inline mmrl::TradingDay make_flat_day(int n, double mid, double tick = 0.5,
                                      int hs_ticks = 1, double qty = 100.0,
                                      std::int64_t ts0 = 1'577'836'800'000) {
  mmrl::TradingDay day;
  day.date = "2020-01-01";
  for (int i = 0; i < n; ++i)
    day.snapshots.push_back(make_book(mid, tick, hs_ticks, qty,
                                      ts0 + 1000LL * i));
  return day;
}

// Day following a given midpoint path (tick-grid midpoints expected).
inline mmrl::TradingDay make_path_day(const std::vector<double>& mids,
                                      double tick = 0.5, int hs_ticks = 1,
                                      double qty = 100.0,
                                      std::int64_t ts0 = 1'577'836'800'000) {
  mmrl::TradingDay day;
  day.date = "2020-01-01";
  for (std::size_t i = 0; i < mids.size(); ++i)
    day.snapshots.push_back(make_book(mids[i], tick, hs_ticks, qty,
                                      ts0 + 1000LL * static_cast<long long>(i)));
  return day;
}

// ------------------------------------------------------------------ rewards

inline double upnl_ref(const mmrl::RewardContext& c) { return c.inv * c.dm; }

inline double upnl_fills_ref(const mmrl::RewardContext& c) {
  return c.inv * c.dm + c.rpnl_step;
}

inline double asym_ref(const mmrl::RewardContext& c, double eta) {
  double damped = eta * c.upnl;
  if (damped > 0.0) damped = 0.0;
  return damped + c.rpnl_step + c.matched_count * c.half_spread;
}

inline double asym_ceiling_ref(const mmrl::RewardContext& c, double eta,
                               double kappa) {
  double damped = eta * c.upnl;
  if (damped > 0.0) damped = 0.0;
  double realized = c.rpnl_step;
  if (realized > kappa) realized = kappa;
  return damped + realized;
}

inline double rpnl_change_ref(const mmrl::RewardContext& c) {
  return c.rpnl_total - c.rpnl_prev;
}

inline double trade_completion_ref(const mmrl::RewardContext& c, double eps,
                                   double varpi) {
  if (c.rpnl_step >= eps * varpi) return 1.0;
  if (c.rpnl_step <= -varpi) return -1.0;
  return c.rpnl_step;
}

// Incremental differential-Sharpe oracle with its own state representation.
struct DsrOracle {
  double A = 0.0;
  double B = 0.0;
  double eta = 0.01;

  double step(double R) {
    const double deltaA = R - A;
    const double deltaB = R * R - B;
    const double var = B - A * A;
    double out = 0.0;
    if (var > 1e-12) {
      const double denom = std::sqrt(var) * var;  // var^{3/2}
      out = (B * deltaA - 0.5 * A * deltaB) / denom;
    }
    A = A + eta * deltaA;
    B = B + eta * deltaB;
    return out;
  }
};

// ------------------------------------------------------------ normalization

// Two-pass mean / population standard deviation per column.
inline std::pair<std::vector<double>, std::vector<double>> two_pass_stats(
    const std::vector<std::vector<double>>& rows) {
  const std::size_t dim = rows.front().size();
  std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < dim; ++i) mean[i] += r[i];
  for (std::size_t i = 0; i < dim; ++i) mean[i] /= rows.size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < dim; ++i)
      sd[i] += (r[i] - mean[i]) * (r[i] - mean[i]);
  for (std::size_t i = 0; i < dim; ++i)
    sd[i] = std::sqrt(sd[i] / rows.size());
  return {mean, sd};
}

// --------------------------------------------------------------- event scan

// Direct scan over a midpoint path: each step opens a band around its first
// midpoint and ends at the first snapshot outside it (or the last snapshot).
inline std::vector<int> segment_ref(const std::vector<double>& mids,
                                    double beta, int start) {
  std::vector<int> out;
  const int n = static_cast<int>(mids.size());
  int i = start;
  while (i < n - 1) {
    const double lo = mids[i] * (1.0 - beta);
    const double hi = mids[i] * (1.0 + beta);
    int j = i + 1;
    while (j < n - 1) {
      if (mids[j] < lo || mids[j] > hi) break;
      ++j;
    }
    out.push_back(j);
    i = j;
  }
  return out;
}

// ------------------------------------------------------------- trade replay

// Brute-force FIFO lot matcher: replays a fill log (buys and sells with their
// fee rates) and recomputes cumulative realized PnL in lot-fraction terms.
struct Replayer {
  struct Lot {
    double price;
    double qty;
    double fee;
  };
  std::deque<Lot> longs, shorts;
  double order_size;
  double rpnl = 0.0;

  explicit Replayer(double sz) : order_size(sz) {}

  void fill(bool buy, double price, double qty, double fee_rate) {
    auto& against = buy ? shorts : longs;
    while (qty > 1e-9 && !against.empty()) {
      Lot& lot = against.front();
      const double q = std::min(qty, lot.qty);
      double frac;
      if (buy)
        frac = lot.price / price - 1.0;  // covering a short
      else
        frac = price / lot.price - 1.0;  // selling a long
      rpnl += q / order_size * (frac - lot.fee - fee_rate);
      lot.qty -= q;
      qty -= q;
      if (lot.qty <= 1e-9) against.pop_front();
    }
    if (qty > 1e-9) {
      auto& with = buy ? longs : shorts;
      with.push_back({price, qty, fee_rate});
    }
  }

  double net_units() const {
    double u = 0.0;
    for (const auto& l : longs) u += l.qty;
    for (const auto& l : shorts) u -= l.qty;
    return u;
  }

  double replay(const std::vector<mmrl::Fill>& log) {
    for (const auto& f : log)
      fill(f.side == mmrl::Side::Bid, f.price, f.quantity, f.fee_rate);
    return rpnl;
  }
};

}  // namespace oracle
