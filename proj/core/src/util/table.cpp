#include "tractflow/util/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tractflow/error.hpp"

namespace tractflow {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_line(std::string_view line, char delim) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      cells.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.emplace_back(trim(cur));
  return cells;
}

char detect_delimiter(std::string_view header) {
  if (header.find('\t') != std::string_view::npos) return '\t';
  if (header.find(';') != std::string_view::npos && header.find(',') == std::string_view::npos) return ';';
  return ',';
}

}  // namespace

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  return std::nullopt;
}

Table parse_table(std::string_view text, std::string_view source) {
  Table table;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (!have_header) {
      table.delimiter = detect_delimiter(line);
      table.columns = split_line(line, table.delimiter);
      have_header = true;
    } else {
      auto cells = split_line(line, table.delimiter);
      if (cells.size() != table.columns.size()) {
        throw Error(Errc::ParseError, std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                                          std::to_string(table.columns.size()) + " cells, got " +
                                          std::to_string(cells.size()));
      }
      table.rows.push_back(std::move(cells));
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw Error(Errc::EmptyInput, std::string(source) + ": no header row");
  return table;
}

Table read_table(const std::string& path) { return parse_table(read_file(path), path); }

double parse_number(std::string_view cell, std::string_view source, std::size_t line, std::string_view column) {
  cell = trim(cell);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw Error(Errc::NonFiniteValue, std::string(source) + ": row " + std::to_string(line) + ", column " +
                                          std::string(column) + ": '" + std::string(cell) + "'");
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingInput, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::MissingInput, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(Errc::MissingInput, "write failed for " + path);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace tractflow
