// Command-line harness: synthetic data generation, data validation,
// price-event segmentation, training, backtesting, benchmark and report
// rendering on top of the mmrl core library.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>

#include "mmrl/harness.hpp"

namespace fs = std::filesystem;
using namespace mmrl;

namespace {

std::string next_date(const std::string& date) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(date.c_str(), "%d-%d-%d", &y, &m, &d) != 3)
    throw std::runtime_error("bad date '" + date + "' (want YYYY-MM-DD)");
  using namespace std::chrono;
  sys_days sd = year_month_day{year{y}, month{unsigned(m)}, day{unsigned(d)}};
  year_month_day n{sd + days{1}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", int(n.year()),
                unsigned(n.month()), unsigned(n.day()));
  return buf;
}

void add_experiment_options(CLI::App* cmd, ExperimentConfig& cfg,
                            std::string& config_file) {
  cmd->add_option("--algo", cfg.algo, "a2c | ppo")
      ->check(CLI::IsMember({"a2c", "ppo"}));
  cmd->add_option("--reward", cfg.reward, "reward function name");
  cmd->add_option("--set", cfg.feature_set, "feature set id (1..6)")
      ->check(CLI::Range(1, 6));
  cmd->add_flag("--no-reward-feature",
                [&cfg](std::int64_t) { cfg.include_reward_feature = false; },
                "drop the last-reward passthrough feature");
  cmd->add_option("--mode", cfg.mode, "event mode: time | price")
      ->check(CLI::IsMember({"time", "price"}));
  cmd->add_option("--action-repeats", cfg.action_repeats,
                  "snapshots per step in time mode");
  cmd->add_option("--beta", cfg.beta, "price-event band half-width");
  cmd->add_option("--window", cfg.window, "observation window length");
  cmd->add_option("--warmup", cfg.warmup, "warm-up snapshots before start");
  cmd->add_option("--order-size", cfg.order_size, "units per limit order");
  cmd->add_option("--max-lots", cfg.max_lots, "inventory cap per direction");
  cmd->add_option("--pnl-target", cfg.daily_pnl_target,
                  "daily PnL normalizer (rho)");
  cmd->add_option("--slippage", cfg.slippage, "flatten slippage per fill");
  cmd->add_option("--seed", cfg.seed, "master RNG seed");
  cmd->add_option("--hidden", cfg.hidden, "shared trunk width");
  cmd->add_option("--head-hidden", cfg.head_hidden, "per-head hidden width");
  cmd->add_option("--gamma", cfg.learner.gamma, "discount factor");
  cmd->add_option("--lr", cfg.learner.learning_rate, "Adam learning rate");
  cmd->add_option("--k-steps", cfg.learner.k_steps, "rollout length");
  cmd->add_option("--gae-lambda", cfg.learner.gae_lambda, "GAE lambda (ppo)");
  cmd->add_option("--clip", cfg.learner.clip_epsilon, "PPO clip epsilon");
  cmd->add_option("--entropy-coef", cfg.learner.entropy_coef);
  cmd->add_option("--value-coef", cfg.learner.value_coef);
  cmd->add_option("--workers", cfg.learner.workers, "parallel environments");
  cmd->add_option("--total-steps", cfg.learner.total_steps,
                  "environment steps to train for");
  cmd->add_option("--config", config_file,
                  "key = value config file (CLI flags override it)");
}

// Applies a line-oriented `key = value` config file ([section] headers and
// `#` comments ignored) to the experiment settings. Both the CLI flag
// spellings (k-steps, lr, set, ...) and the config-echo spellings
// (k_steps, learning_rate, feature_set, ...) are accepted, so a previous
// run's config.echo replays as-is. Returns the set of normalized keys seen.
std::set<std::string> apply_config_file(const std::string& path,
                                        ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#' || line[first] == ';' || line[first] == '[')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '-', '_');

    auto as_bool = [&] {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw std::runtime_error(path + ": bad boolean for " + key);
    };
    if (key == "algo") cfg.algo = value;
    else if (key == "reward") cfg.reward = value;
    else if (key == "set" || key == "feature_set") cfg.feature_set = std::stoi(value);
    else if (key == "include_reward_feature") cfg.include_reward_feature = as_bool();
    else if (key == "no_reward_feature") cfg.include_reward_feature = !as_bool();
    else if (key == "mode") cfg.mode = value;
    else if (key == "action_repeats") cfg.action_repeats = std::stoi(value);
    else if (key == "beta") cfg.beta = std::stod(value);
    else if (key == "window") cfg.window = std::stoi(value);
    else if (key == "warmup") cfg.warmup = std::stoi(value);
    else if (key == "order_size") cfg.order_size = std::stod(value);
    else if (key == "max_lots") cfg.max_lots = std::stoi(value);
    else if (key == "pnl_target" || key == "daily_pnl_target")
      cfg.daily_pnl_target = std::stod(value);
    else if (key == "slippage") cfg.slippage = std::stod(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "random_start") cfg.random_start = as_bool();
    else if (key == "greedy") cfg.greedy = as_bool();
    else if (key == "hidden") cfg.hidden = std::stoi(value);
    else if (key == "head_hidden") cfg.head_hidden = std::stoi(value);
    else if (key == "gamma") cfg.learner.gamma = std::stod(value);
    else if (key == "lr" || key == "learning_rate")
      cfg.learner.learning_rate = std::stod(value);
    else if (key == "k_steps") cfg.learner.k_steps = std::stoi(value);
    else if (key == "gae_lambda") cfg.learner.gae_lambda = std::stod(value);
    else if (key == "clip" || key == "clip_epsilon")
      cfg.learner.clip_epsilon = std::stod(value);
    else if (key == "entropy_coef") cfg.learner.entropy_coef = std::stod(value);
    else if (key == "value_coef") cfg.learner.value_coef = std::stod(value);
    else if (key == "workers") cfg.learner.workers = std::stoi(value);
    else if (key == "total_steps") cfg.learner.total_steps = std::stol(value);
    else
      throw std::runtime_error(path + ": unknown config key '" + key + "'");
    seen.insert(key);
  }
  return seen;
}

void finalize_learner(ExperimentConfig& cfg, CLI::App* cmd,
                      const std::set<std::string>& from_file) {
  // Start from the per-algorithm defaults, then re-apply explicit overrides
  // (from the CLI or the config file).
  LearnerConfig base = cfg.algo == "ppo" ? LearnerConfig::ppo_defaults()
                                         : LearnerConfig::a2c_defaults();
  if (cmd->count("--k-steps") == 0 && !from_file.count("k_steps"))
    cfg.learner.k_steps = base.k_steps;
  if (cmd->count("--lr") == 0 && !from_file.count("lr") &&
      !from_file.count("learning_rate"))
    cfg.learner.learning_rate = base.learning_rate;
  cfg.learner.algo = base.algo;
  cfg.learner.normalize_advantages = base.normalize_advantages;
  cfg.learner.seed = cfg.seed;
}

// CLI flags must override the config file, so the file has to be applied to
// the defaults before CLI11 parses; find it with a pre-scan of argv.
std::string prescan_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

int run_synth(const SynthParams& base, int days, const std::string& out_dir,
              bool gzip) {
  fs::create_directories(out_dir);
  SynthParams p = base;
  for (int i = 0; i < days; ++i) {
    TradingDay day = synth_day(p);
    std::string path = (fs::path(out_dir) /
                        ("day_" + p.date + (gzip ? ".csv.gz" : ".csv")))
                           .string();
    save_day(day, path);
    std::cout << path << " (" << day.snapshots.size() << " snapshots)\n";
    p.date = next_date(p.date);
    p.seed += 1;
  }
  return 0;
}

int run_validate(const std::vector<std::string>& files) {
  int failures = 0;
  for (const auto& f : files) {
    try {
      TradingDay day = load_day(f);
      std::cout << f << ": ok, " << day.snapshots.size() << " snapshots, date "
                << day.date << "\n";
    } catch (const std::exception& e) {
      std::cerr << f << ": " << e.what() << "\n";
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

int run_segment(const std::string& file, double beta, int start) {
  TradingDay day = load_day(file);
  std::vector<int> bounds = segment_price_events(day, beta, start);
  const int n = static_cast<int>(day.snapshots.size());
  std::cout << "file: " << file << "\n"
            << "snapshots: " << n << "\n"
            << "beta: " << beta << "\n"
            << "events: " << bounds.size() << "\n";
  if (!bounds.empty()) {
    double mean_len = double(bounds.back() - start) / double(bounds.size());
    std::cout << "mean snapshots/event: " << mean_len << "\n";
  }
  return 0;
}

std::vector<std::string> training_files(const std::string& data_dir) {
  std::vector<std::string> files = list_day_files(data_dir);
  if (files.size() < 4)
    throw std::runtime_error(
        data_dir + ": need >= 4 day files (3 normalizer days + 1 target day)");
  return files;
}

int run_train(ExperimentConfig& cfg, const std::string& data_dir,
              const std::string& out_dir, long checkpoint_every) {
  std::vector<std::string> files = training_files(data_dir);
  std::vector<TradingDay> norm_days;
  for (int i = 0; i < 3; ++i) norm_days.push_back(load_day(files[i]));
  NormalizationStats stats =
      fit_normalizer({&norm_days[0], &norm_days[1], &norm_days[2]});

  std::vector<TradingDay> train_days;
  for (std::size_t i = 3; i < files.size(); ++i)
    train_days.push_back(load_day(files[i]));

  fs::create_directories(out_dir);
  EpisodeConfig probe =
      cfg.episode_config(&train_days[0], &stats, /*random_start=*/false);
  Environment probe_env(probe);
  PolicyConfig pc;
  pc.obs_dim = probe_env.observation_size();
  pc.n_actions = kActionCount;
  pc.hidden = cfg.hidden;
  pc.head_hidden = cfg.head_hidden;
  PolicyNet net(pc, cfg.seed);

  EnvFactory factory = [&](int worker) {
    const TradingDay* day = &train_days[worker % train_days.size()];
    EpisodeConfig ep = cfg.episode_config(day, &stats, cfg.random_start);
    ep.seed = cfg.seed + 1000 + static_cast<std::uint64_t>(worker);
    return std::make_unique<Environment>(ep);
  };

  const std::string ckpt = (fs::path(out_dir) / "checkpoint.ckpt").string();
  TrainResult tr = train(net, cfg.learner, factory, ckpt, checkpoint_every);
  write_training_log_csv(tr.log, (fs::path(out_dir) / "training_log.csv").string());
  write_config_echo(cfg.echo(), (fs::path(out_dir) / "config.echo").string());
  std::cout << "trained " << tr.steps << " steps, checkpoint: " << ckpt << "\n";
  return 0;
}

int run_backtest(ExperimentConfig& cfg, const std::string& data_dir,
                 const std::string& checkpoint, const std::string& out_dir) {
  std::vector<std::string> files = training_files(data_dir);
  PolicyNet net = PolicyNet::load(checkpoint);
  BacktestResult res = backtest(net, cfg, files, out_dir);
  if (!out_dir.empty())
    write_config_echo(cfg.echo(), (fs::path(out_dir) / "config.echo").string());
  for (const auto& d : res.days)
    std::cout << d.date << ": return " << format_pnl_cell(d.daily_return_pct)
              << "%, trades " << d.trades << ", steps " << d.steps
              << ", max drawdown " << d.max_drawdown_pct << "%\n";
  std::cout << "total return: " << format_pnl_cell(res.total_return_pct)
            << "% (compounded " << format_pnl_cell(res.compounded_return_pct)
            << "%)\n";
  return 0;
}

int run_benchmark(const std::string& data_dir) {
  std::vector<std::string> files = training_files(data_dir);
  std::vector<std::string> test_files(files.begin() + 3, files.end());
  double pct = benchmark_buy_hold_files(test_files);
  std::cout << "buy-and-hold return over " << test_files.size()
            << " day(s): " << format_pnl_cell(pct) << "%\n";
  return 0;
}

int run_report(const std::string& results, const std::string& out_csv,
               const std::vector<std::string>& skip_days) {
  std::vector<ResultsRow> rows = read_results_csv(results);
  if (!skip_days.empty())
    std::erase_if(rows, [&](const ResultsRow& r) {
      return std::find(skip_days.begin(), skip_days.end(), r.date) !=
             skip_days.end();
    });
  std::cout << render_report(rows, out_csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmrl: limit-order-book market-making RL harness"};
  app.require_subcommand(1);

  // synth
  SynthParams sp;
  int synth_days = 1;
  std::string synth_out = ".";
  bool synth_gzip = false;
  CLI::App* synth = app.add_subcommand("synth", "generate synthetic day files");
  synth->add_option("--seed", sp.seed);
  synth->add_option("--date", sp.date, "first day (YYYY-MM-DD)");
  synth->add_option("--days", synth_days, "number of consecutive days");
  synth->add_option("--snapshots", sp.snapshots, "snapshots per day");
  synth->add_option("--mid0", sp.mid0, "opening midpoint");
  synth->add_option("--tick", sp.tick);
  synth->add_option("--move-prob", sp.move_prob);
  synth->add_option("--drift", sp.drift);
  synth->add_option("--mean-reversion", sp.mean_reversion);
  synth->add_option("--base-qty", sp.base_qty);
  synth->add_option("--flow-intensity", sp.flow_intensity);
  synth->add_option("--out", synth_out, "output directory");
  synth->add_flag("--gzip", synth_gzip, "write .csv.gz");

  // validate
  std::vector<std::string> validate_files;
  CLI::App* validate = app.add_subcommand("validate", "check day files");
  validate->add_option("files", validate_files)->required();

  // segment
  std::string seg_file;
  double seg_beta = 0.0001;
  int seg_start = 0;
  CLI::App* segment =
      app.add_subcommand("segment", "price-event segmentation stats");
  segment->add_option("--day", seg_file, "day CSV file")->required();
  segment->add_option("--beta", seg_beta);
  segment->add_option("--start", seg_start);

  // The config file seeds the defaults; explicit CLI flags then override.
  std::string config_path = prescan_config_path(argc, argv);
  std::set<std::string> config_keys;

  // train
  ExperimentConfig train_cfg;
  std::string train_data, train_out = "runs/train", train_config;
  long ckpt_every = 0;
  CLI::App* train_cmd = app.add_subcommand("train", "train a policy");
  train_cmd->add_option("--data", train_data, "directory of day_*.csv[.gz]")
      ->required();
  train_cmd->add_option("--out", train_out, "output directory");
  train_cmd->add_option("--checkpoint-every", ckpt_every,
                        "steps between periodic checkpoints (0 = final only)");
  if (!config_path.empty())
    config_keys = apply_config_file(config_path, train_cfg);
  add_experiment_options(train_cmd, train_cfg, train_config);

  // backtest
  ExperimentConfig bt_cfg;
  std::string bt_data, bt_ckpt, bt_out = "runs/backtest", bt_config;
  CLI::App* bt = app.add_subcommand("backtest", "evaluate a checkpoint");
  bt->add_option("--data", bt_data)->required();
  bt->add_option("--checkpoint", bt_ckpt)->required();
  bt->add_option("--out", bt_out, "output directory");
  if (!config_path.empty()) apply_config_file(config_path, bt_cfg);
  bt->add_flag("--greedy", bt_cfg.greedy, "argmax actions instead of sampling");
  add_experiment_options(bt, bt_cfg, bt_config);

  // benchmark
  std::string bench_data;
  CLI::App* bench =
      app.add_subcommand("benchmark", "buy-and-hold baseline return");
  bench->add_option("--data", bench_data)->required();

  // report
  std::string rep_results, rep_out = "report.csv";
  std::vector<std::string> rep_skip;
  CLI::App* report = app.add_subcommand("report", "render the results grid");
  report->add_option("--results", rep_results, "results.csv path")->required();
  report->add_option("--out", rep_out, "report CSV output path");
  report->add_option("--skip-days", rep_skip, "dates to exclude")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synth(sp, synth_days, synth_out, synth_gzip);
    if (*validate) return run_validate(validate_files);
    if (*segment) return run_segment(seg_file, seg_beta, seg_start);
    if (*train_cmd) {
      train_cfg.reward_kind();  // fail fast on a bad reward name
      finalize_learner(train_cfg, train_cmd, config_keys);
      return run_train(train_cfg, train_data, train_out, ckpt_every);
    }
    if (*bt) {
      bt_cfg.reward_kind();
      finalize_learner(bt_cfg, bt, config_keys);
      return run_backtest(bt_cfg, bt_data, bt_ckpt, bt_out);
    }
    if (*bench) return run_benchmark(bench_data);
    if (*report) return run_report(rep_results, rep_out, rep_skip);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
