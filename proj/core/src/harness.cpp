#include "mmrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mmrl {

namespace fs = std::filesystem;

EventMode ExperimentConfig::event_mode() const {
  if (mode == "time") return EventMode::time_mode(action_repeats);
  if (mode == "price") return EventMode::price_mode(beta);
  throw std::runtime_error("mode must be 'time' or 'price', got '" + mode + "'");
}

RewardKind ExperimentConfig::reward_kind() const {
  auto kind = parse_reward_name(reward);
  if (!kind) {
    std::string msg = "unknown reward '" + reward + "'; valid names:";
    for (const auto& n : reward_names()) msg += " " + n;
    throw std::runtime_error(msg);
  }
  return *kind;
}

ExchangeConfig ExperimentConfig::exchange_config() const {
  ExchangeConfig ex;
  ex.order_size = order_size;
  ex.max_lots = max_lots;
  ex.slippage = slippage;
  return ex;
}

EpisodeConfig ExperimentConfig::episode_config(
    const TradingDay* day, const NormalizationStats* stats,
    bool random_start_override) const {
  EpisodeConfig ep;
  ep.day = day;
  ep.stats = stats;
  ep.feature_set = FeatureSet::from_id(feature_set, include_reward_feature);
  ep.reward = reward_kind();
  ep.mode = event_mode();
  ep.random_start = random_start_override;
  ep.seed = seed;
  ep.exchange = exchange_config();
  ep.daily_pnl_target = daily_pnl_target;
  ep.window = window;
  ep.warmup = warmup;
  return ep;
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
  std::map<std::string, std::string> e;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
  };
  e["algo"] = algo;
  e["reward"] = reward;
  e["feature_set"] = std::to_string(feature_set);
  e["include_reward_feature"] = include_reward_feature ? "true" : "false";
  e["mode"] = mode;
  e["action_repeats"] = std::to_string(action_repeats);
  e["beta"] = num(beta);
  e["window"] = std::to_string(window);
  e["warmup"] = std::to_string(warmup);
  e["order_size"] = num(order_size);
  e["max_lots"] = std::to_string(max_lots);
  e["daily_pnl_target"] = num(daily_pnl_target);
  e["slippage"] = num(slippage);
  e["seed"] = std::to_string(seed);
  e["random_start"] = random_start ? "true" : "false";
  e["greedy"] = greedy ? "true" : "false";
  e["hidden"] = std::to_string(hidden);
  e["head_hidden"] = std::to_string(head_hidden);
  e["gamma"] = num(learner.gamma);
  e["learning_rate"] = num(learner.learning_rate);
  e["k_steps"] = std::to_string(learner.k_steps);
  e["gae_lambda"] = num(learner.gae_lambda);
  e["clip_epsilon"] = num(learner.clip_epsilon);
  e["entropy_coef"] = num(learner.entropy_coef);
  e["value_coef"] = num(learner.value_coef);
  e["workers"] = std::to_string(learner.workers);
  e["total_steps"] = std::to_string(learner.total_steps);
  return e;
}

std::vector<std::string> list_day_files(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    auto ends_with = [&](const std::string& suf) {
      return name.size() >= suf.size() &&
             name.compare(name.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (name.rfind("day_", 0) == 0 &&
        (ends_with(".csv") || ends_with(".csv.gz")))
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

BacktestResult backtest(const PolicyNet& net, const ExperimentConfig& cfg,
                        const std::vector<std::string>& day_files,
                        const std::string& out_dir) {
  if (day_files.size() < 4)
    throw std::runtime_error(
        "backtest needs >= 4 day files (3 normalizer days + 1 test day)");

  // Rolling window of loaded days: [k-3, k-2, k-1] normalize day k.
  std::vector<TradingDay> loaded;
  for (std::size_t i = 0; i < 3; ++i) loaded.push_back(load_day(day_files[i]));

  BacktestResult result;
  std::ofstream summary;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    summary.open(fs::path(out_dir) / "episode_summary.csv");
    summary << "date,mode,reward_fn,feature_set,steps,trades,"
               "daily_return_pct,max_drawdown_pct\n";
  }

  std::mt19937_64 rng(cfg.seed);
  for (std::size_t k = 3; k < day_files.size(); ++k) {
    TradingDay day = load_day(day_files[k]);
    NormalizationStats stats =
        fit_normalizer({&loaded[0], &loaded[1], &loaded[2]});

    EpisodeConfig ep = cfg.episode_config(&day, &stats, /*random_start=*/false);
    Environment env(ep);
    Observation obs = env.reset();
    std::vector<double> flat = obs.flatten();
    if (static_cast<int>(flat.size()) != net.config().obs_dim)
      throw std::runtime_error("checkpoint/observation dimension mismatch");

    BacktestDayResult dr;
    dr.date = day.date;
    double peak = 0.0, max_dd = 0.0;
    while (!env.done()) {
      int a = select_action(net, flat.data(), cfg.greedy, rng) + 1;
      StepResult sr = env.step(a);
      flat = sr.observation.flatten();
      ++dr.steps;
      const double equity = env.equity();
      peak = std::max(peak, equity);
      max_dd = std::max(max_dd, peak - equity);
    }
    dr.daily_return_pct = env.exchange().rpnl_total() * 100.0;
    dr.trades = static_cast<int>(env.exchange().trade_log().size());
    dr.max_drawdown_pct = max_dd * 100.0;
    result.days.push_back(dr);

    if (!out_dir.empty()) {
      ExchangeSim::write_trade_log_csv(
          env.exchange().trade_log(),
          (fs::path(out_dir) / ("trades_" + day.date + ".csv")).string());
      summary << dr.date << "," << cfg.mode << "," << cfg.reward << ","
              << cfg.feature_set << "," << dr.steps << "," << dr.trades << ","
              << dr.daily_return_pct << "," << dr.max_drawdown_pct << "\n";
    }

    loaded.erase(loaded.begin());
    loaded.push_back(std::move(day));
  }

  double compounded = 1.0;
  for (const auto& d : result.days) {
    result.total_return_pct += d.daily_return_pct;
    compounded *= 1.0 + d.daily_return_pct / 100.0;
  }
  result.compounded_return_pct = (compounded - 1.0) * 100.0;

  if (!out_dir.empty())
    append_results_csv((fs::path(out_dir) / "results.csv").string(), cfg,
                       result.days);
  return result;
}

double benchmark_buy_hold(const std::vector<const TradingDay*>& days) {
  if (days.empty()) throw std::runtime_error("benchmark: empty day range");
  const double first = days.front()->snapshots.front().midpoint();
  const double last = days.back()->snapshots.back().midpoint();
  return (last / first - 1.0) * 100.0;
}

double benchmark_buy_hold_files(const std::vector<std::string>& day_files) {
  if (day_files.empty()) throw std::runtime_error("benchmark: empty day range");
  TradingDay first = load_day(day_files.front());
  if (day_files.size() == 1) return benchmark_buy_hold({&first});
  TradingDay last = load_day(day_files.back());
  return benchmark_buy_hold({&first, &last});
}

std::string format_pnl_cell(double pct) {
  char buf[48];
  if (pct < 0.0)
    std::snprintf(buf, sizeof(buf), "(-%.2f)", -pct);
  else
    std::snprintf(buf, sizeof(buf), "%.2f", pct);
  return buf;
}

std::vector<ResultsRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<ResultsRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    ResultsRow r;
    std::string set_s, ret_s, trades_s;
    std::getline(ss, r.reward, ',');
    std::getline(ss, set_s, ',');
    std::getline(ss, r.algo, ',');
    std::getline(ss, r.mode, ',');
    std::getline(ss, r.date, ',');
    std::getline(ss, ret_s, ',');
    std::getline(ss, trades_s, ',');
    r.set = std::stoi(set_s);
    r.daily_return_pct = std::stod(ret_s);
    r.trades = std::stoi(trades_s);
    rows.push_back(r);
  }
  return rows;
}

void append_results_csv(const std::string& path, const ExperimentConfig& cfg,
                        const std::vector<BacktestDayResult>& days) {
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path);
  if (fresh) out << "reward,set,algo,mode,date,daily_return_pct,trades\n";
  for (const auto& d : days)
    out << cfg.reward << "," << cfg.feature_set << "," << cfg.algo << ","
        << cfg.mode << "," << d.date << "," << d.daily_return_pct << ","
        << d.trades << "\n";
}

std::string render_report(const std::vector<ResultsRow>& rows,
                          const std::string& csv_out_path) {
  // Aggregate total return per (mode, reward, algo, set).
  struct Cell {
    double total = 0.0;
    bool present = false;
  };
  std::map<std::string, std::map<std::string, Cell>> grid;  // mode -> key
  std::set<std::string> modes;
  auto key = [](const std::string& reward, const std::string& algo, int set) {
    return reward + "|" + algo + "|" + std::to_string(set);
  };
  for (const auto& r : rows) {
    modes.insert(r.mode);
    Cell& c = grid[r.mode][key(r.reward, r.algo, r.set)];
    c.total += r.daily_return_pct;
    c.present = true;
  }

  std::ofstream csv;
  if (!csv_out_path.empty()) {
    csv.open(csv_out_path);
    csv << "mode,reward,algo,set,total_return_pct\n";
  }

  std::ostringstream out;
  const int cell_w = 10;
  for (const std::string& mode : modes) {
    out << mode << "-event: Profit-and-Loss (%)\n";
    out << std::string(18, ' ');
    for (const std::string& algo : {"a2c", "ppo"})
      for (int set = 1; set <= 6; ++set) {
        char h[32];
        std::snprintf(h, sizeof(h), "%s/S%d", algo.c_str(), set);
        out << std::string(cell_w - std::strlen(h), ' ') << h;
      }
    out << "\n";
    for (const std::string& reward : reward_names()) {
      char name[32];
      std::snprintf(name, sizeof(name), "%-18s", reward.c_str());
      out << name;
      for (const std::string& algo : {"a2c", "ppo"})
        for (int set = 1; set <= 6; ++set) {
          auto it = grid[mode].find(key(reward, algo, set));
          std::string cell;
          if (it != grid[mode].end() && it->second.present) {
            cell = format_pnl_cell(it->second.total);
            if (csv.is_open())
              csv << mode << "," << reward << "," << algo << "," << set << ","
                  << it->second.total << "\n";
          }
          out << std::string(cell_w - std::min<std::size_t>(cell.size(), cell_w),
                             ' ')
              << cell;
        }
      out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

void write_config_echo(const std::map<std::string, std::string>& echo,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "[experiment]\n";
  for (const auto& [k, v] : echo) out << k << " = " << v << "\n";
}

}  // namespace mmrl
