// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace amh::csv {

/// Shortest decimal string that parses back to exactly `x`.
std::string num(double x);

/// Strict parse of the whole field; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view line);

struct Row {
  std::size_t line = 0;  // 1-based line number in the file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column index or -1.
  int column(std::string_view name) const;
};

/// Reads a comma-separated file with a header line. Blank lines are skipped;
/// CRLF endings are accepted. An empty file gives an empty table.
Table read(const std::string& path);

class Writer {
 public:
  explicit Writer(const std::string& path);
  Writer& row(const std::vector<std::string>& fields);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace amh::csv
