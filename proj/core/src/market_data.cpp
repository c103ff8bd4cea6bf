#include "mmrl/market_data.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <random>
#include <stdexcept>

#include "mmrl/features.hpp"

namespace mmrl {
namespace {

constexpr std::int64_t kMsPerDay = 86'400'000;

// Civil-date <-> days-since-epoch conversions (proleptic Gregorian, UTC).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

std::string date_from_ts(std::int64_t ts_ms) {
  std::int64_t days = ts_ms / kMsPerDay;
  if (ts_ms < 0 && ts_ms % kMsPerDay != 0) --days;
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

std::int64_t parse_date_ms(const std::string& date) {
  int y, m, d;
  if (std::sscanf(date.c_str(), "%d-%d-%d", &y, &m, &d) != 3)
    throw std::runtime_error("bad date string: " + date);
  return days_from_civil(y, m, d) * kMsPerDay;
}

bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

// Line-oriented reader over plain or gzip files, chosen by extension.
class LineReader {
 public:
  explicit LineReader(const std::string& path) : gz_(ends_with(path, ".gz")) {
    if (gz_) {
      gzf_ = gzopen(path.c_str(), "rb");
      if (!gzf_) throw std::runtime_error("cannot open " + path);
    } else {
      in_.open(path);
      if (!in_) throw std::runtime_error("cannot open " + path);
    }
  }
  ~LineReader() {
    if (gzf_) gzclose(gzf_);
  }
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  bool next(std::string& line) {
    if (gz_) {
      line.clear();
      char buf[1 << 14];
      for (;;) {
        if (!gzgets(gzf_, buf, sizeof(buf))) return !line.empty();
        line += buf;
        if (!line.empty() && line.back() == '\n') break;
      }
      while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
        line.pop_back();
      return true;
    }
    if (!std::getline(in_, line)) return false;
    while (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

 private:
  bool gz_;
  gzFile gzf_ = nullptr;
  std::ifstream in_;
};

class LineWriter {
 public:
  explicit LineWriter(const std::string& path) : gz_(ends_with(path, ".gz")) {
    if (gz_) {
      gzf_ = gzopen(path.c_str(), "wb");
      if (!gzf_) throw std::runtime_error("cannot open " + path);
    } else {
      out_.open(path);
      if (!out_) throw std::runtime_error("cannot open " + path);
    }
  }
  ~LineWriter() {
    if (gzf_) gzclose(gzf_);
  }
  LineWriter(const LineWriter&) = delete;
  LineWriter& operator=(const LineWriter&) = delete;

  void write(const std::string& s) {
    if (gz_) {
      if (gzwrite(gzf_, s.data(), static_cast<unsigned>(s.size())) !=
          static_cast<int>(s.size()))
        throw std::runtime_error("gzwrite failed");
    } else {
      out_ << s;
    }
  }

 private:
  bool gz_;
  gzFile gzf_ = nullptr;
  std::ofstream out_;
};

constexpr int kColumns = 1 + 10 * kBookLevels + 2;

std::string expected_header() {
  std::string h = "ts_ms";
  auto block = [&h](const char* name) {
    for (int i = 0; i < kBookLevels; ++i)
      h += "," + std::string(name) + "_" + std::to_string(i);
  };
  block("bid_px");
  block("bid_qty");
  block("ask_px");
  block("ask_qty");
  block("cancel_bid");
  block("cancel_ask");
  block("limit_bid");
  block("limit_ask");
  block("market_bid");
  block("market_ask");
  h += ",buy_notional,sell_notional";
  return h;
}

int split_doubles(const std::string& line, double* out, int max_fields) {
  const char* p = line.c_str();
  int n = 0;
  for (;;) {
    char* end = nullptr;
    double v = std::strtod(p, &end);
    if (end == p) return -1;  // not a number
    if (n >= max_fields) return max_fields + 1;
    out[n++] = v;
    p = end;
    while (*p == ' ') ++p;
    if (*p == '\0') break;
    if (*p != ',') return -1;
    ++p;
  }
  return n;
}

}  // namespace

std::string validate_snapshot(const LobSnapshot& s) {
  if (!(s.bid_px[0] < s.ask_px[0])) return "crossed book: best bid >= best ask";
  for (int i = 1; i < kBookLevels; ++i) {
    if (!(s.bid_px[i] < s.bid_px[i - 1]))
      return "bid prices not strictly decreasing at level " + std::to_string(i);
    if (!(s.ask_px[i] > s.ask_px[i - 1]))
      return "ask prices not strictly increasing at level " + std::to_string(i);
  }
  auto nonneg = [](const std::array<double, kBookLevels>& a) {
    for (double v : a)
      if (v < 0.0 || !std::isfinite(v)) return false;
    return true;
  };
  if (!nonneg(s.bid_qty) || !nonneg(s.ask_qty)) return "negative quantity";
  if (!nonneg(s.cancel_bid) || !nonneg(s.cancel_ask) || !nonneg(s.limit_bid) ||
      !nonneg(s.limit_ask) || !nonneg(s.market_bid) || !nonneg(s.market_ask))
    return "negative flow notional";
  if (s.buy_notional < 0.0 || s.sell_notional < 0.0)
    return "negative trade notional";
  return {};
}

TradingDay load_day(const std::string& path) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) throw std::runtime_error(path + ": empty file");
  if (line != expected_header())
    throw std::runtime_error(path + ": unexpected CSV header");

  TradingDay day;
  double fields[kColumns];
  std::int64_t row = 1;  // header was row 1
  std::int64_t day_start = 0;
  while (reader.next(line)) {
    ++row;
    if (line.empty()) continue;
    int n = split_doubles(line, fields, kColumns);
    if (n != kColumns)
      throw std::runtime_error(path + ": row " + std::to_string(row) +
                               ": expected " + std::to_string(kColumns) +
                               " columns");
    LobSnapshot s;
    s.ts_ms = static_cast<std::int64_t>(fields[0]);
    int k = 1;
    auto take = [&](std::array<double, kBookLevels>& a) {
      for (int i = 0; i < kBookLevels; ++i) a[i] = fields[k++];
    };
    take(s.bid_px);
    take(s.bid_qty);
    take(s.ask_px);
    take(s.ask_qty);
    take(s.cancel_bid);
    take(s.cancel_ask);
    take(s.limit_bid);
    take(s.limit_ask);
    take(s.market_bid);
    take(s.market_ask);
    s.buy_notional = fields[k++];
    s.sell_notional = fields[k++];

    if (std::string err = validate_snapshot(s); !err.empty())
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": " +
                               err);
    if (day.snapshots.empty()) {
      day.date = date_from_ts(s.ts_ms);
      day_start = parse_date_ms(day.date);
    } else if (s.ts_ms <= day.snapshots.back().ts_ms) {
      throw std::runtime_error(path + ": row " + std::to_string(row) +
                               ": timestamps not strictly increasing");
    }
    if (s.ts_ms < day_start || s.ts_ms >= day_start + kMsPerDay)
      throw std::runtime_error(path + ": row " + std::to_string(row) +
                               ": timestamp outside UTC day " + day.date);
    day.snapshots.push_back(s);
  }
  if (day.snapshots.size() < 2)
    throw std::runtime_error(path + ": a trading day needs >= 2 snapshots");
  return day;
}

void save_day(const TradingDay& day, const std::string& path) {
  LineWriter writer(path);
  writer.write(expected_header() + "\n");
  std::string line;
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), ",%.17g", v);
    line += buf;
  };
  for (const LobSnapshot& s : day.snapshots) {
    line.clear();
    std::snprintf(buf, sizeof(buf), "%lld",
                  static_cast<long long>(s.ts_ms));
    line += buf;
    for (const auto* block :
         {&s.bid_px, &s.bid_qty, &s.ask_px, &s.ask_qty, &s.cancel_bid,
          &s.cancel_ask, &s.limit_bid, &s.limit_ask, &s.market_bid,
          &s.market_ask})
      for (double v : *block) put(v);
    put(s.buy_notional);
    put(s.sell_notional);
    line += "\n";
    writer.write(line);
  }
}

NormalizationStats fit_stats(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::runtime_error("fit_stats: empty feature stream");
  const std::size_t dim = rows.front().size();
  std::vector<double> sum(dim, 0.0), sumsq(dim, 0.0);
  std::vector<double> lo(rows.front()), hi(rows.front());
  for (const auto& r : rows) {
    if (r.size() != dim)
      throw std::runtime_error("fit_stats: inconsistent row length");
    for (std::size_t i = 0; i < dim; ++i) {
      sum[i] += r[i];
      sumsq[i] += r[i] * r[i];
      lo[i] = std::min(lo[i], r[i]);
      hi[i] = std::max(hi[i], r[i]);
    }
  }
  NormalizationStats st;
  st.mean.resize(dim);
  st.std.resize(dim);
  const double n = static_cast<double>(rows.size());
  for (std::size_t i = 0; i < dim; ++i) {
    st.mean[i] = sum[i] / n;
    // A constant column is exactly degenerate; don't let accumulation
    // rounding turn it into a tiny positive variance.
    if (lo[i] == hi[i]) {
      st.std[i] = 0.0;
      continue;
    }
    double var = sumsq[i] / n - st.mean[i] * st.mean[i];
    st.std[i] = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  return st;
}

NormalizationStats fit_normalizer(const std::vector<const TradingDay*>& days) {
  if (days.size() != 3)
    throw std::runtime_error("fit_normalizer: exactly 3 prior days required");
  std::vector<std::vector<double>> rows;
  for (const TradingDay* day : days) {
    if (!day || day->snapshots.empty())
      throw std::runtime_error("fit_normalizer: empty trading day");
    FeatureSeries series(*day);
    const int n = static_cast<int>(day->snapshots.size());
    rows.reserve(rows.size() + n);
    for (int i = 0; i < n; ++i)
      rows.push_back(env_feature_row(*day, series, i, /*last_reward=*/0.0));
  }
  NormalizationStats st = fit_stats(rows);
  // The reward passthrough feature has no data-side distribution at fit
  // time; leave it on the identity scale.
  st.mean[kRewardFeatureIndex] = 0.0;
  st.std[kRewardFeatureIndex] = 1.0;
  return st;
}

void normalize(const NormalizationStats& stats, const double* x, double* out,
               std::size_t n) {
  if (n != stats.size())
    throw std::runtime_error("normalize: length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (stats.std[i] == 0.0) {
      out[i] = 0.0;
      continue;
    }
    double z = (x[i] - stats.mean[i]) / stats.std[i];
    if (z > stats.clip_bound) z = stats.clip_bound;
    if (z < -stats.clip_bound) z = -stats.clip_bound;
    out[i] = z;
  }
}

std::vector<double> normalize(const NormalizationStats& stats,
                              const std::vector<double>& x) {
  std::vector<double> out(x.size());
  normalize(stats, x.data(), out.data(), x.size());
  return out;
}

TradingDay synth_day(const SynthParams& p) {
  if (p.snapshots < 2) throw std::runtime_error("synth_day: snapshots < 2");
  if (p.tick <= 0.0 || p.mid0 <= 0.0 || p.base_qty <= 0.0 ||
      p.half_spread_ticks < 1)
    throw std::runtime_error("synth_day: invalid params");

  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  TradingDay day;
  day.date = p.date;
  day.snapshots.resize(p.snapshots);
  const std::int64_t ts0 = parse_date_ms(p.date);
  const std::int64_t spacing =
      p.snapshots <= 86400 ? 1000 : kMsPerDay / (p.snapshots + 1);

  const std::int64_t mid0_ticks =
      static_cast<std::int64_t>(std::llround(p.mid0 / p.tick));
  std::int64_t mid_ticks = mid0_ticks;
  const double exp_scale = p.flow_intensity;

  for (int t = 0; t < p.snapshots; ++t) {
    if (t > 0 && p.move_prob > 0.0 && uni(rng) < p.move_prob) {
      double pull = p.mean_reversion * static_cast<double>(mid_ticks - mid0_ticks);
      double up_prob = 0.5 + 0.5 * p.drift - pull;
      up_prob = std::min(0.98, std::max(0.02, up_prob));
      mid_ticks += uni(rng) < up_prob ? 1 : -1;
      // The synthetic midpoint never walks below a minimal positive book.
      if (mid_ticks < p.half_spread_ticks + kBookLevels + 1)
        mid_ticks = p.half_spread_ticks + kBookLevels + 1;
    }
    LobSnapshot& s = day.snapshots[t];
    s.ts_ms = ts0 + static_cast<std::int64_t>(t) * spacing;

    int hs = p.half_spread_ticks;
    if (uni(rng) < 0.10) ++hs;  // occasional spread widening
    const double bb = (mid_ticks - hs) * p.tick;
    const double ba = (mid_ticks + hs) * p.tick;
    for (int i = 0; i < kBookLevels; ++i) {
      s.bid_px[i] = bb - i * p.tick;
      s.ask_px[i] = ba + i * p.tick;
      double ramp = 1.0 + 0.05 * i;
      double jb = 1.0, ja = 1.0;
      if (i < 5 && p.qty_jitter > 0.0) {
        jb += p.qty_jitter * (2.0 * uni(rng) - 1.0);
        ja += p.qty_jitter * (2.0 * uni(rng) - 1.0);
      }
      s.bid_qty[i] = std::max(1.0, p.base_qty * ramp * jb);
      s.ask_qty[i] = std::max(1.0, p.base_qty * ramp * ja);
    }
    if (t > 0 && p.flow_intensity > 0.0) {
      auto expo = [&] { return -std::log(1.0 - uni(rng)) * exp_scale; };
      s.market_bid[0] = expo();  // seller-initiated prints at the bid
      s.market_ask[0] = expo();  // buyer-initiated prints at the ask
      s.limit_bid[0] = expo() * 0.5;
      s.limit_ask[0] = expo() * 0.5;
      s.cancel_bid[1] = expo() * 0.25;
      s.cancel_ask[1] = expo() * 0.25;
      s.buy_notional = s.market_ask[0];
      s.sell_notional = s.market_bid[0];
    }
  }
  return day;
}

}  // namespace mmrl
