#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mmrl/harness.hpp"
#include "oracles.hpp"

using namespace mmrl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("list_day_files filters and date-sorts") {
  fs::path dir = fresh_dir("mmrl_days");
  for (const char* name :
       {"day_2020-01-03.csv", "day_2020-01-01.csv.gz", "day_2020-01-02.csv",
        "notes.txt", "results.csv", "day_bak.csv.old"})
    std::ofstream(dir / name) << "x";
  auto files = list_day_files(dir.string());
  REQUIRE(files.size() == 3);
  CHECK(fs::path(files[0]).filename() == "day_2020-01-01.csv.gz");
  CHECK(fs::path(files[1]).filename() == "day_2020-01-02.csv");
  CHECK(fs::path(files[2]).filename() == "day_2020-01-03.csv");
}

TEST_CASE("pnl cell formatting parenthesizes negatives") {
  CHECK(format_pnl_cell(3.2) == "3.20");
  CHECK(format_pnl_cell(0.0) == "0.00");
  CHECK(format_pnl_cell(-12.05) == "(-12.05)");
  CHECK(format_pnl_cell(-0.004) == "(-0.00)");
}

TEST_CASE("experiment configuration") {
  ExperimentConfig cfg;

  SUBCASE("unknown reward names list the valid ones") {
    cfg.reward = "bogus";
    CHECK_THROWS_WITH_AS(cfg.reward_kind(), doctest::Contains("valid names"),
                         std::runtime_error);
    try {
      cfg.reward_kind();
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      for (const auto& name : reward_names())
        CHECK(msg.find(name) != std::string::npos);
    }
  }
  SUBCASE("event mode resolves from the mode string") {
    cfg.mode = "time";
    cfg.action_repeats = 7;
    CHECK(cfg.event_mode().action_repeats == 7);
    cfg.mode = "price";
    cfg.beta = 0.0002;
    CHECK(cfg.event_mode().beta == doctest::Approx(0.0002));
    cfg.mode = "weird";
    CHECK_THROWS_AS(cfg.event_mode(), std::runtime_error);
  }
  SUBCASE("config echo round-trips through the echo file") {
    cfg.reward = "dsr";
    cfg.feature_set = 4;
    auto echo = cfg.echo();
    CHECK(echo.at("reward") == "dsr");
    CHECK(echo.at("feature_set") == "4");
    fs::path dir = fresh_dir("mmrl_echo");
    write_config_echo(echo, (dir / "config.echo").string());
    const std::string text = slurp(dir / "config.echo");
    CHECK(text.find("[experiment]") == 0);
    CHECK(text.find("reward = dsr") != std::string::npos);
    CHECK(text.find("feature_set = 4") != std::string::npos);
  }
}

TEST_CASE("results CSV round trip") {
  fs::path dir = fresh_dir("mmrl_results");
  const std::string path = (dir / "results.csv").string();
  ExperimentConfig cfg;
  cfg.reward = "asym";
  cfg.feature_set = 3;
  cfg.algo = "ppo";
  cfg.mode = "price";
  std::vector<BacktestDayResult> days(2);
  days[0].date = "2020-01-04";
  days[0].daily_return_pct = 1.25;
  days[0].trades = 7;
  days[1].date = "2020-01-05";
  days[1].daily_return_pct = -0.5;
  days[1].trades = 3;
  append_results_csv(path, cfg, days);
  append_results_csv(path, cfg, {days[0]});  // append keeps prior rows

  auto rows = read_results_csv(path);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].reward == "asym");
  CHECK(rows[0].algo == "ppo");
  CHECK(rows[0].mode == "price");
  CHECK(rows[0].set == 3);
  CHECK(rows[0].date == "2020-01-04");
  CHECK(rows[0].daily_return_pct == doctest::Approx(1.25));
  CHECK(rows[0].trades == 7);
  CHECK(rows[1].daily_return_pct == doctest::Approx(-0.5));
}

TEST_CASE("report rendering") {
  fs::path dir = fresh_dir("mmrl_report");
  std::vector<ResultsRow> rows;
  ResultsRow r;
  r.reward = "upnl";
  r.algo = "a2c";
  r.mode = "time";
  r.set = 2;
  r.date = "2020-01-04";
  r.daily_return_pct = -12.05;
  rows.push_back(r);
  r.reward = "dsr";
  r.set = 5;
  r.date = "2020-01-05";
  r.daily_return_pct = 4.0;
  rows.push_back(r);
  r.daily_return_pct = 3.5;  // second day sums into the same cell
  rows.push_back(r);

  const std::string table =
      render_report(rows, (dir / "report.csv").string());
  CHECK(table.find("(-12.05)") != std::string::npos);
  CHECK(table.find("7.50") != std::string::npos);
  CHECK(table.find("upnl") != std::string::npos);
  CHECK(table.find("trade_completion") != std::string::npos);  // blank row kept

  const std::string csv = slurp(dir / "report.csv");
  CHECK(csv.find("time,upnl,a2c,2,-12.05") != std::string::npos);
  CHECK(csv.find("time,dsr,a2c,5,7.5") != std::string::npos);
}

TEST_CASE("buy-and-hold benchmark") {
  TradingDay d1 = oracle::make_flat_day(50, 8000.0);
  TradingDay d2 = oracle::make_flat_day(50, 9300.0);
  CHECK(benchmark_buy_hold({&d1}) == doctest::Approx(0.0));
  CHECK(benchmark_buy_hold({&d1, &d2}) == doctest::Approx(16.25));
  CHECK(benchmark_buy_hold({&d2, &d1}) ==
        doctest::Approx((8000.0 / 9300.0 - 1.0) * 100.0));
}

TEST_CASE("backtest over a small day directory") {
  fs::path dir = fresh_dir("mmrl_backtest");
  std::vector<std::string> files;
  SynthParams p;
  p.snapshots = 700;
  p.base_qty = 2.0;
  p.flow_intensity = 60000.0;
  const char* dates[] = {"2020-01-01", "2020-01-02", "2020-01-03",
                         "2020-01-04", "2020-01-05"};
  for (int i = 0; i < 5; ++i) {
    p.seed = 200 + i;
    p.date = dates[i];
    TradingDay day = synth_day(p);
    std::string path = (dir / ("day_" + day.date + ".csv")).string();
    save_day(day, path);
    files.push_back(path);
  }

  ExperimentConfig cfg;
  cfg.feature_set = 2;
  cfg.window = 5;
  cfg.warmup = 300;
  cfg.reward = "trade_completion";
  cfg.seed = 11;
  PolicyConfig pc;
  pc.obs_dim = 5 * 29 + kAgentStateSize;
  pc.hidden = 16;
  pc.head_hidden = 16;
  PolicyNet net(pc, 42);

  fs::path out = fresh_dir("mmrl_backtest_out");
  BacktestResult a = backtest(net, cfg, files, out.string());
  REQUIRE(a.days.size() == 2);  // 5 files, first 3 fit the normalizer
  CHECK(a.days[0].date == "2020-01-04");
  CHECK(a.days[1].date == "2020-01-05");
  double sum = 0.0;
  double comp = 1.0;
  for (const auto& d : a.days) {
    sum += d.daily_return_pct;
    comp *= 1.0 + d.daily_return_pct / 100.0;
    CHECK(d.steps > 0);
    CHECK(d.max_drawdown_pct >= 0.0);
  }
  CHECK(a.total_return_pct == doctest::Approx(sum));
  CHECK(a.compounded_return_pct == doctest::Approx((comp - 1.0) * 100.0));

  SUBCASE("artifacts are written") {
    CHECK(fs::exists(out / "episode_summary.csv"));
    CHECK(fs::exists(out / "results.csv"));
    CHECK(fs::exists(out / "trades_2020-01-04.csv"));
    CHECK(fs::exists(out / "trades_2020-01-05.csv"));
    const std::string summary = slurp(out / "episode_summary.csv");
    CHECK(summary.find("date,mode,reward_fn,feature_set,steps,trades,"
                       "daily_return_pct,max_drawdown_pct") == 0);
    auto rows = read_results_csv((out / "results.csv").string());
    CHECK(rows.size() == 2);
  }
  SUBCASE("stochastic evaluation is seed-deterministic") {
    BacktestResult b = backtest(net, cfg, files, "");
    REQUIRE(b.days.size() == a.days.size());
    for (std::size_t i = 0; i < a.days.size(); ++i) {
      CHECK(b.days[i].daily_return_pct == a.days[i].daily_return_pct);
      CHECK(b.days[i].trades == a.days[i].trades);
      CHECK(b.days[i].steps == a.days[i].steps);
    }
  }
  SUBCASE("greedy evaluation is deterministic regardless of seed") {
    ExperimentConfig g = cfg;
    g.greedy = true;
    BacktestResult b1 = backtest(net, g, files, "");
    g.seed = 999;
    BacktestResult b2 = backtest(net, g, files, "");
    for (std::size_t i = 0; i < b1.days.size(); ++i)
      CHECK(b1.days[i].daily_return_pct == b2.days[i].daily_return_pct);
  }
  SUBCASE("fewer than four day files is rejected") {
    std::vector<std::string> three(files.begin(), files.begin() + 3);
    CHECK_THROWS_AS(backtest(net, cfg, three, ""), std::runtime_error);
  }
}
