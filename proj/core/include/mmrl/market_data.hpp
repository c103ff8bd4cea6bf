#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mmrl {

inline constexpr int kBookLevels = 20;

/// One timestamped 20-level two-sided book state plus the order/trade flow
/// notionals accumulated since the previous snapshot.
struct LobSnapshot {
  std::int64_t ts_ms = 0;
  std::array<double, kBookLevels> bid_px{}, bid_qty{};
  std::array<double, kBookLevels> ask_px{}, ask_qty{};
  // Flow notionals (currency) per side per level since the previous snapshot.
  std::array<double, kBookLevels> cancel_bid{}, cancel_ask{};
  std::array<double, kBookLevels> limit_bid{}, limit_ask{};
  std::array<double, kBookLevels> market_bid{}, market_ask{};
  // Buyer- / seller-initiated trade notionals since the previous snapshot.
  double buy_notional = 0.0;
  double sell_notional = 0.0;

  double midpoint() const { return 0.5 * (bid_px[0] + ask_px[0]); }
  double spread() const { return ask_px[0] - bid_px[0]; }
};

/// One UTC calendar day of strictly time-ordered snapshots.
struct TradingDay {
  std::string date;  // "YYYY-MM-DD", derived from the first timestamp (UTC)
  std::vector<LobSnapshot> snapshots;
};

/// Per-feature z-score statistics with a fixed clip bound.
struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation; 0 => degenerate
  double clip_bound = 10.0;

  std::size_t size() const { return mean.size(); }
  bool degenerate(std::size_t i) const { return std[i] == 0.0; }
};

/// Loads a day from CSV (transparently gunzipped when the path ends in .gz).
/// Throws std::runtime_error naming the offending row on parse or invariant
/// violations (crossed book, non-monotone prices/time, negative quantities).
TradingDay load_day(const std::string& path);

/// Writes a day in the same CSV schema load_day reads (gzip by extension).
void save_day(const TradingDay& day, const std::string& path);

/// Validates one snapshot; returns an empty string when valid, otherwise a
/// description of the first violated invariant.
std::string validate_snapshot(const LobSnapshot& s);

/// Population mean/std per column over a row-major matrix of feature rows.
NormalizationStats fit_stats(const std::vector<std::vector<double>>& rows);

/// Fits z-score statistics over all environment feature rows of exactly
/// three prior trading days. The last-reward column is left as identity
/// (mean 0, std 1): it has no data-side distribution at fit time.
NormalizationStats fit_normalizer(const std::vector<const TradingDay*>& days);

/// z = clip((x - mean) / std, +-clip_bound); degenerate columns map to 0.
void normalize(const NormalizationStats& stats, const double* x, double* out,
               std::size_t n);
std::vector<double> normalize(const NormalizationStats& stats,
                              const std::vector<double>& x);

/// Synthetic day generator: mean-reverting midpoint walk on a fixed tick
/// grid with flow notionals consistent with the printed trades.
struct SynthParams {
  std::uint64_t seed = 1;
  std::string date = "2020-01-01";
  int snapshots = 86390;
  double mid0 = 9000.0;           // opening midpoint (currency)
  double tick = 0.5;              // price grid
  int half_spread_ticks = 1;      // best bid/ask distance from midpoint
  double move_prob = 0.25;        // per-second probability of a 1-tick move
  double drift = 0.0;             // bias in [-1,1] toward up moves
  double mean_reversion = 0.02;   // pull toward mid0, per tick of distance
  double base_qty = 5000.0;       // resting units per level
  double qty_jitter = 0.5;        // relative noise on level quantities
  double flow_intensity = 20000.0;  // mean market notional per second/side
};

TradingDay synth_day(const SynthParams& params);

}  // namespace mmrl
