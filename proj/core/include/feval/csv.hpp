#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace feval::csv {

// A parsed CSV file with a mandatory header row. Accessors report problems as
// ValidationError carrying the 1-based data row and the column name.
class Table {
 public:
  Table(std::string source, std::vector<std::string> header,
        std::vector<std::vector<std::string>> rows);

  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }
  std::size_t row_count() const { return rows_.size(); }

  std::optional<std::size_t> find_column(const std::string& name) const;
  std::size_t require_column(const std::string& name) const;

  // `row` is 0-based here; errors report it 1-based.
  const std::string& text(std::size_t row, std::size_t column) const;
  double number(std::size_t row, std::size_t column) const;
  long long integer(std::size_t row, std::size_t column) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

Table read(const std::filesystem::path& path);
Table parse(std::istream& in, const std::string& source);

// Shortest decimal representation that parses back to the same double.
std::string format_number(double value);

void write_row(std::ostream& out, const std::vector<std::string>& cells);

}  // namespace feval::csv
