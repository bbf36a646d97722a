// SPDX-License-Identifier: Apache-2.0
#include "amhedge/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "amhedge/csv.hpp"
#include "amhedge/error.hpp"

namespace amh {

namespace {

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int month_days(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && leap(y) ? 29 : kDays[m - 1];
}

std::string where(const std::string& path, std::size_t line) { return path + ":" + std::to_string(line); }

}  // namespace

std::optional<Date> Date::parse(std::string_view s) {
  s = csv::trim(s);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const auto y = csv::parse_int(s.substr(0, 4));
  const auto m = csv::parse_int(s.substr(5, 2));
  const auto d = csv::parse_int(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  if (*m < 1 || *m > 12 || *d < 1 || *d > month_days(static_cast<int>(*y), static_cast<int>(*m))) return std::nullopt;
  return Date{static_cast<int>(*y), static_cast<int>(*m), static_cast<int>(*d)};
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

long Date::days() const {
  // Howard Hinnant's days_from_civil.
  const int y = year - (month <= 2);
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

int Date::weekday() const {
  // 1970-01-01 was a Thursday.
  const long w = (days() + 3) % 7;
  return static_cast<int>(w < 0 ? w + 7 : w);
}

ChainLoad load_option_chain(const std::string& path) {
  const auto t = csv::read(path);
  ChainLoad out;
  if (t.header.empty()) {
    out.warnings.push_back(path + ": empty option chain");
    return out;
  }
  static const char* kCols[] = {"symbol", "quote_date", "close", "maturity", "strike", "mid", "iv"};
  int col[7];
  for (int i = 0; i < 7; ++i) {
    col[i] = t.column(kCols[i]);
    if (col[i] < 0) throw FormatError(path + ": missing column '" + kCols[i] + "'");
  }
  for (const auto& row : t.rows) {
    auto reject = [&](const std::string& why) { out.rejected.push_back({row.line, why}); };
    if (row.fields.size() != t.header.size()) {
      reject("expected " + std::to_string(t.header.size()) + " fields");
      continue;
    }
    OptionQuote q;
    q.symbol = row.fields[col[0]];
    const auto qd = Date::parse(row.fields[col[1]]);
    const auto md = Date::parse(row.fields[col[3]]);
    const auto close = csv::parse_double(row.fields[col[2]]);
    const auto strike = csv::parse_double(row.fields[col[4]]);
    const auto mid = csv::parse_double(row.fields[col[5]]);
    const auto iv = csv::parse_double(row.fields[col[6]]);
    if (q.symbol.empty()) {
      reject("empty symbol");
    } else if (!qd || !md) {
      reject("unparsable date");
    } else if (!close || !strike || !mid || !iv) {
      reject("unparsable number");
    } else if (!(*close > 0.0)) {
      reject("close must be positive");
    } else if (!(*strike > 0.0)) {
      reject("strike must be positive");
    } else if (!(*mid > 0.0)) {
      reject("mid must be positive");
    } else if (!(*iv > 0.0)) {
      reject("iv must be positive");
    } else if (!(*md > *qd)) {
      reject("maturity must follow the quote date");
    } else {
      q.quote_date = *qd;
      q.maturity = *md;
      q.spot = *close;
      q.strike = *strike;
      q.mid = *mid;
      q.iv = *iv;
      out.quotes.push_back(std::move(q));
    }
  }
  if (t.rows.empty()) out.warnings.push_back(path + ": option chain has no rows");
  for (const auto& r : out.rejected) out.warnings.push_back(where(path, r.line) + ": row rejected: " + r.reason);
  return out;
}

void write_option_chain(const std::string& path, const std::vector<OptionQuote>& quotes) {
  csv::Writer w(path);
  w.row({"symbol", "quote_date", "close", "maturity", "strike", "mid", "iv"});
  for (const auto& q : quotes)
    w.row({q.symbol, q.quote_date.iso(), csv::num(q.spot), q.maturity.iso(), csv::num(q.strike), csv::num(q.mid),
           csv::num(q.iv)});
  w.close();
}

std::optional<std::size_t> PriceSeries::find(const Date& d) const {
  const auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - dates.begin());
}

std::vector<double> PriceSeries::slice(const Date& from, const Date& to) const {
  const auto a = find(from), b = find(to);
  if (!a) throw DataError(symbol + ": no close on " + from.iso());
  if (!b) throw DataError(symbol + ": no close on " + to.iso());
  if (*b < *a) throw DataError(symbol + ": slice end precedes start");
  return {closes.begin() + static_cast<long>(*a), closes.begin() + static_cast<long>(*b) + 1};
}

std::vector<std::string> price_series_symbols(const std::string& path) {
  const auto t = csv::read(path);
  if (t.header.empty() || t.header[0] != "date") throw FormatError(path + ": first column must be 'date'");
  return {t.header.begin() + 1, t.header.end()};
}

PriceSeries load_price_series(const std::string& path, const std::string& symbol) {
  const auto t = csv::read(path);
  if (t.header.empty() || t.header[0] != "date") throw FormatError(path + ": first column must be 'date'");
  const int col = t.column(symbol);
  if (col <= 0) throw LookupError(path + ": unknown symbol '" + symbol + "'");
  PriceSeries ps;
  ps.symbol = symbol;
  for (const auto& row : t.rows) {
    if (row.fields.size() != t.header.size())
      throw FormatError(where(path, row.line) + ": expected " + std::to_string(t.header.size()) + " fields");
    const auto d = Date::parse(row.fields[0]);
    if (!d) throw FormatError(where(path, row.line) + ": bad date '" + row.fields[0] + "'");
    if (!ps.dates.empty() && !(*d > ps.dates.back()))
      throw FormatError(where(path, row.line) + ": dates must be strictly increasing (" + d->iso() + ")");
    const auto c = csv::parse_double(row.fields[col]);
    if (!c) throw DataError(where(path, row.line) + ": unparsable close for " + symbol);
    if (!(*c > 0.0)) throw DataError(where(path, row.line) + ": close must be positive");
    ps.dates.push_back(*d);
    ps.closes.push_back(*c);
  }
  return ps;
}

int trading_days(const Date& from, const Date& to, const PriceSeries* calendar) {
  require(to > from, "trading_days: end must follow start");
  if (calendar && !calendar->dates.empty() && calendar->dates.front() <= from && calendar->dates.back() >= to) {
    const auto lo = std::upper_bound(calendar->dates.begin(), calendar->dates.end(), from);
    const auto hi = std::upper_bound(calendar->dates.begin(), calendar->dates.end(), to);
    return static_cast<int>(hi - lo);
  }
  int n = 0;
  for (long d = from.days() + 1; d <= to.days(); ++d) {
    const long w = (d + 3) % 7;
    if (w < 5) ++n;
  }
  return n;
}

std::string data_dir(const std::string& fallback) {
  const char* env = std::getenv("AMHEDGE_DATA_DIR");
  return env && *env ? std::string(env) : fallback;
}

}  // namespace amh
