#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace esim::csv {

/// In-memory delimiter-separated table with a header row. Fields are kept as
/// strings; typed access goes through Row so parse failures carry the row index.
class Table {
 public:
  static Table read(const std::string& path, char delimiter = ',');
  static Table parse(std::string_view text, std::string name, char delimiter = ',');

  const std::string& name() const { return name_; }
  std::size_t size() const { return rows_.size(); }
  bool has_column(std::string_view column) const;

  /// Throws MissingColumn naming the first absent column.
  void require(std::initializer_list<std::string_view> columns) const;

  class Row {
   public:
    Row(const Table& table, std::size_t index) : table_(table), index_(index) {}

    std::size_t index() const { return index_ + 1; }
    const std::string& str(std::string_view column) const;
    std::optional<std::string> opt_str(std::string_view column) const;
    double num(std::string_view column) const;
    std::optional<double> opt_num(std::string_view column) const;
    long integer(std::string_view column) const;
    std::optional<long> opt_integer(std::string_view column) const;

    [[noreturn]] void fail(const std::string& what) const;

   private:
    const Table& table_;
    std::size_t index_;
  };

  Row row(std::size_t i) const { return Row(*this, i); }

 private:
  std::string name_;
  std::map<std::string, std::size_t, std::less<>> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::vector<std::string_view> split(std::string_view line, char delimiter);
std::optional<double> to_double(std::string_view text);
std::optional<long> to_long(std::string_view text);

/// Shortest round-trip decimal representation of a double.
std::string format_number(double value);

}  // namespace esim::csv
