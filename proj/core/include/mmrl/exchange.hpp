#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mmrl/market_data.hpp"

namespace mmrl {

enum class Side { Bid, Ask };

/// Maker rebates, taker pays; both as signed fractions of notional.
struct FeeSchedule {
  double maker = -0.00025;
  double taker = 0.00075;
};

/// Decoded instruction for one action id (1..17).
struct ActionSpec {
  bool noop = false;
  bool flatten = false;
  int bid_level = -1;  // -1 = leave side untouched
  int ask_level = -1;
};

/// Table of quoting actions: 1 = no action, 2..16 = (bid level, ask level)
/// pairs over depths {0,4,9,14}, 17 = market-flatten the inventory.
ActionSpec decode_action(int action_id);

struct OpenOrder {
  Side side;
  double price = 0.0;
  double size = 0.0;         // units
  double queue_ahead = 0.0;  // notional resting ahead at placement
  double executed = 0.0;     // units filled so far
  int level_at_placement = 0;
};

struct InventoryLot {
  Side side;  // Bid = long, Ask = short
  double entry_price = 0.0;
  double quantity = 0.0;
  std::int64_t entry_ts = 0;
  double entry_fee_rate = 0.0;
};

struct Fill {
  std::int64_t ts_ms = 0;
  int action_id = 0;
  Side side;  // Bid = buy, Ask = sell
  double price = 0.0;
  double quantity = 0.0;
  bool maker = false;
  double fee_rate = 0.0;
  double rpnl_step_after = 0.0;
  double inventory_after = 0.0;  // net lots
};

struct ExchangeConfig {
  double order_size = 1.0;  // units per order (Sz)
  int max_lots = 10;        // IM
  FeeSchedule fees;
  double slippage = 0.0001;  // per-transaction flatten slippage
};

/// Deterministic execution simulator: limit-order queue mechanics, fills,
/// maker/taker fees, FIFO netting, and recursive flatten slippage. Replayed
/// quotes never alter the book itself.
class ExchangeSim {
 public:
  explicit ExchangeSim(const ExchangeConfig& cfg = {});

  void reset();

  /// Clears the per-snapshot realized PnL and execution counters.
  void begin_snapshot();

  /// Decodes and applies one action against the given snapshot. A side that
  /// would push inventory past the cap is suppressed at quote time.
  void apply_action(int action_id, const LobSnapshot& s);

  /// Consumes one snapshot of aggressive flow: queue-ahead depletes first,
  /// then the order fills pro-rata at its limit price.
  void match(const LobSnapshot& s);

  /// Market-closes every lot FIFO with recursive slippage and taker fees,
  /// and cancels both open orders.
  void flatten_all(const LobSnapshot& s);

  // Accessors.
  const std::optional<OpenOrder>& open_bid() const { return open_bid_; }
  const std::optional<OpenOrder>& open_ask() const { return open_ask_; }
  const std::deque<InventoryLot>& long_lots() const { return longs_; }
  const std::deque<InventoryLot>& short_lots() const { return shorts_; }
  double long_units() const;
  double short_units() const;
  double net_lots() const;  // (long - short) units / Sz
  int lot_count() const { return static_cast<int>(longs_.size() + shorts_.size()); }
  double rpnl_total() const { return rpnl_total_; }
  double rpnl_step() const { return rpnl_step_; }
  int executions_this_snapshot() const { return executions_; }
  int fills_this_snapshot() const { return fills_this_snapshot_; }
  /// Mark-to-market inventory PnL in lot-fraction terms (sums (q/Sz) legs).
  double unrealized_at(double midpoint) const;
  const ExchangeConfig& config() const { return cfg_; }
  const std::vector<Fill>& trade_log() const { return trade_log_; }

  static void write_trade_log_csv(const std::vector<Fill>& log,
                                  const std::string& path);

 private:
  void place_or_modify(Side side, int level, const LobSnapshot& s);
  void cancel_order(Side side, const LobSnapshot& s);
  void match_side(std::optional<OpenOrder>& order, const LobSnapshot& s);
  /// FIFO-nets an executed quantity; the surplus opens a new lot.
  void net_fill(Side side, double price, double qty, double fee_rate,
                std::int64_t ts);
  void record_fill(Side side, double price, double qty, bool maker,
                   double fee_rate, std::int64_t ts);
  bool side_at_capacity(Side side) const;

  ExchangeConfig cfg_;
  std::optional<OpenOrder> open_bid_, open_ask_;
  std::deque<InventoryLot> longs_, shorts_;
  double rpnl_total_ = 0.0;
  double rpnl_step_ = 0.0;
  int executions_ = 0;
  int fills_this_snapshot_ = 0;
  int current_action_ = 1;
  std::vector<Fill> trade_log_;
};

}  // namespace mmrl
