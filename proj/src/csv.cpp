#include "esim/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "esim/error.hpp"

namespace esim::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<long> to_long(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string format_number(double value) { return fmt::format("{}", value); }

Table Table::read(const std::string& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path, delimiter);
}

Table Table::parse(std::string_view text, std::string name, char delimiter) {
  Table table;
  table.name_ = std::move(name);

  // Strip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::size_t start = 0;
  bool have_header = false;
  std::size_t width = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto fields = split(line, delimiter);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        table.columns_.emplace(std::string(fields[i]), i);
      }
      width = fields.size();
      have_header = true;
    } else {
      if (fields.size() != width) {
        throw MalformedRow(table.name_, table.rows_.size() + 1,
                           fmt::format("expected {} fields, found {}", width, fields.size()));
      }
      table.rows_.emplace_back(fields.begin(), fields.end());
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw MissingColumn(table.name_ + ": empty file, no header row");
  return table;
}

bool Table::has_column(std::string_view column) const { return columns_.find(column) != columns_.end(); }

void Table::require(std::initializer_list<std::string_view> columns) const {
  for (auto column : columns) {
    if (!has_column(column)) {
      throw MissingColumn(fmt::format("{}: missing column '{}'", name_, column));
    }
  }
}

const std::string& Table::Row::str(std::string_view column) const {
  const auto it = table_.columns_.find(column);
  if (it == table_.columns_.end()) {
    throw MissingColumn(fmt::format("{}: missing column '{}'", table_.name_, column));
  }
  return table_.rows_[index_][it->second];
}

std::optional<std::string> Table::Row::opt_str(std::string_view column) const {
  const auto it = table_.columns_.find(column);
  if (it == table_.columns_.end()) return std::nullopt;
  const auto& value = table_.rows_[index_][it->second];
  if (value.empty()) return std::nullopt;
  return value;
}

double Table::Row::num(std::string_view column) const {
  const auto& text = str(column);
  const auto value = to_double(text);
  if (!value) fail(fmt::format("column '{}': '{}' is not a number", column, text));
  return *value;
}

std::optional<double> Table::Row::opt_num(std::string_view column) const {
  const auto text = opt_str(column);
  if (!text) return std::nullopt;
  const auto value = to_double(*text);
  if (!value) fail(fmt::format("column '{}': '{}' is not a number", column, *text));
  return value;
}

long Table::Row::integer(std::string_view column) const {
  const auto& text = str(column);
  const auto value = to_long(text);
  if (!value) fail(fmt::format("column '{}': '{}' is not an integer", column, text));
  return *value;
}

std::optional<long> Table::Row::opt_integer(std::string_view column) const {
  const auto text = opt_str(column);
  if (!text) return std::nullopt;
  const auto value = to_long(*text);
  if (!value) fail(fmt::format("column '{}': '{}' is not an integer", column, *text));
  return value;
}

void Table::Row::fail(const std::string& what) const { throw MalformedRow(table_.name_, index(), what); }

}  // namespace esim::csv
