#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tractflow {

/// A delimiter-separated text table: header row plus string cells.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  char delimiter = ',';

  std::optional<std::size_t> column(std::string_view name) const;
};

/// Parses delimited text. The delimiter is tab, semicolon or comma, picked from
/// the header line. Blank lines and lines starting with '#' are skipped.
/// Double-quoted cells may contain delimiters.
Table parse_table(std::string_view text, std::string_view source = "<memory>");
/// Reads and parses a file; throws MissingInput if it cannot be opened.
Table read_table(const std::string& path);

/// Parses a real number; throws NonFiniteValue naming source, line and column.
double parse_number(std::string_view cell, std::string_view source, std::size_t line, std::string_view column);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// Shortest decimal text that round-trips the double.
std::string format_double(double v);

}  // namespace tractflow
