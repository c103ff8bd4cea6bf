#pragma once

#include <map>
#include <string>
#include <vector>

#include "mmrl/environment.hpp"
#include "mmrl/learner.hpp"
#include "mmrl/policy.hpp"

namespace mmrl {

/// Resolved experiment settings shared by train and backtest runs.
struct ExperimentConfig {
  std::string algo = "a2c";  // a2c | ppo
  std::string reward = "trade_completion";
  int feature_set = 1;
  bool include_reward_feature = true;
  std::string mode = "time";  // time | price
  int action_repeats = 5;
  double beta = 0.0001;
  int window = 100;
  int warmup = 1800;
  double order_size = 1.0;
  int max_lots = 10;
  double daily_pnl_target = 0.01;
  double slippage = 0.0001;
  std::uint64_t seed = 0;
  bool random_start = true;
  bool greedy = false;  // backtest action selection
  int hidden = 256;
  int head_hidden = 256;
  LearnerConfig learner;

  EventMode event_mode() const;
  RewardKind reward_kind() const;  // throws listing valid names on error
  ExchangeConfig exchange_config() const;
  EpisodeConfig episode_config(const TradingDay* day,
                               const NormalizationStats* stats,
                               bool random_start_override) const;
  std::map<std::string, std::string> echo() const;
};

/// Day files named day_<date>.csv or .csv.gz under a directory, date-sorted.
std::vector<std::string> list_day_files(const std::string& dir);

struct BacktestDayResult {
  std::string date;
  double daily_return_pct = 0.0;
  int trades = 0;
  int steps = 0;
  double max_drawdown_pct = 0.0;
};

struct BacktestResult {
  std::vector<BacktestDayResult> days;
  double total_return_pct = 0.0;       // arithmetic sum of daily %
  double compounded_return_pct = 0.0;  // product of daily growth factors
};

/// Runs one evaluation episode per test day. `day_files` must start with
/// the three normalizer-fit days preceding the first test day; each test
/// day is normalized from its own three predecessors. Artifacts
/// (trades_<date>.csv, episode_summary.csv, results.csv) go under out_dir
/// when non-empty.
BacktestResult backtest(const PolicyNet& net, const ExperimentConfig& cfg,
                        const std::vector<std::string>& day_files,
                        const std::string& out_dir);

/// (last day's final midpoint / first day's first midpoint - 1) x 100.
double benchmark_buy_hold(const std::vector<const TradingDay*>& days);
double benchmark_buy_hold_files(const std::vector<std::string>& day_files);

/// Report cell: two decimals, negatives parenthesized, "(-12.05)".
std::string format_pnl_cell(double pct);

struct ResultsRow {
  std::string reward, algo, mode, date;
  int set = 0;
  double daily_return_pct = 0.0;
  int trades = 0;
};

std::vector<ResultsRow> read_results_csv(const std::string& path);
void append_results_csv(const std::string& path, const ExperimentConfig& cfg,
                        const std::vector<BacktestDayResult>& days);

/// Renders the reward x (algo x set) grid per event mode; missing cells
/// stay blank. Returns the aligned text table and writes report.csv rows.
std::string render_report(const std::vector<ResultsRow>& rows,
                          const std::string& csv_out_path);

void write_config_echo(const std::map<std::string, std::string>& echo,
                       const std::string& path);

}  // namespace mmrl
