// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace amh {

/// Civil calendar date.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  /// Strict YYYY-MM-DD; nullopt if malformed or not a real date.
  static std::optional<Date> parse(std::string_view s);
  std::string iso() const;
  /// Days since 1970-01-01.
  long days() const;
  /// 0 = Monday ... 6 = Sunday.
  int weekday() const;

  auto operator<=>(const Date&) const = default;
};

struct OptionQuote {
  std::string symbol;
  Date quote_date;
  Date maturity;
  double strike = 0.0;
  double mid = 0.0;
  double iv = 0.0;
  double spot = 0.0;
};

struct RowReject {
  std::size_t line = 0;
  std::string reason;
};

struct ChainLoad {
  std::vector<OptionQuote> quotes;
  std::vector<RowReject> rejected;
  std::vector<std::string> warnings;
};

/// Header: symbol,quote_date,close,maturity,strike,mid,iv (any column order).
/// Rows that fail validation are listed in `rejected` with their line numbers.
ChainLoad load_option_chain(const std::string& path);
void write_option_chain(const std::string& path, const std::vector<OptionQuote>& quotes);

struct PriceSeries {
  std::string symbol;
  std::vector<Date> dates;
  std::vector<double> closes;

  /// Index of `d`, or nullopt.
  std::optional<std::size_t> find(const Date& d) const;
  /// Closes from `from` through `to` inclusive; DataError if either date is absent.
  std::vector<double> slice(const Date& from, const Date& to) const;
};

/// Wide CSV: a `date` column followed by one close column per symbol.
PriceSeries load_price_series(const std::string& path, const std::string& symbol);
std::vector<std::string> price_series_symbols(const std::string& path);

/// Trading days strictly after `from` up to and including `to`, counted on the
/// series' own calendar when it covers the range, else on weekdays.
int trading_days(const Date& from, const Date& to, const PriceSeries* calendar = nullptr);

/// Directory holding the shipped fixtures: $AMHEDGE_DATA_DIR, else `fallback`.
std::string data_dir(const std::string& fallback = "data");

}  // namespace amh
