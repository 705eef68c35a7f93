#include "feval/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <boost/algorithm/string/trim.hpp>
#include <boost/tokenizer.hpp>

#include "feval/errors.hpp"

namespace feval {

namespace {
std::string describe(const std::string& what, std::optional<std::size_t> row,
                     const std::string& column) {
  std::string out;
  if (row) out += "row " + std::to_string(*row);
  if (!column.empty()) out += std::string(out.empty() ? "" : ", ") + "column '" + column + "'";
  return out.empty() ? what : out + ": " + what;
}
}  // namespace

ValidationError::ValidationError(const std::string& what, std::optional<std::size_t> row,
                                 std::string column)
    : Error(describe(what, row, column)), row_(row), column_(std::move(column)) {}

namespace csv {

Table::Table(std::string source, std::vector<std::string> header,
             std::vector<std::vector<std::string>> rows)
    : source_(std::move(source)), header_(std::move(header)), rows_(std::move(rows)) {}

std::optional<std::size_t> Table::find_column(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(const std::string& name) const {
  if (auto idx = find_column(name)) return *idx;
  throw ValidationError(source_ + ": missing required column", std::nullopt, name);
}

const std::string& Table::text(std::size_t row, std::size_t column) const {
  const auto& cells = rows_.at(row);
  if (column >= cells.size() || cells[column].empty()) {
    throw ValidationError(source_ + ": empty cell", row + 1, header_.at(column));
  }
  return cells[column];
}

double Table::number(std::size_t row, std::size_t column) const {
  const std::string& cell = text(row, column);
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw ValidationError(source_ + ": non-numeric value '" + cell + "'", row + 1,
                          header_.at(column));
  }
  return value;
}

long long Table::integer(std::size_t row, std::size_t column) const {
  const std::string& cell = text(row, column);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw ValidationError(source_ + ": non-integer value '" + cell + "'", row + 1,
                          header_.at(column));
  }
  return value;
}

Table parse(std::istream& in, const std::string& source) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (boost::algorithm::trim_copy(line).empty()) continue;
    std::vector<std::string> cells;
    try {
      Tokenizer tok(line, boost::escaped_list_separator<char>('\\', ',', '"'));
      for (const auto& cell : tok) cells.push_back(boost::algorithm::trim_copy(cell));
    } catch (const boost::escaped_list_error& e) {
      throw ValidationError(source + ": malformed CSV line (" + e.what() + ")",
                            have_header ? std::optional<std::size_t>(rows.size() + 1)
                                        : std::nullopt);
    }
    if (!have_header) {
      header = std::move(cells);
      have_header = true;
      std::unordered_set<std::string> seen;
      for (const auto& name : header) {
        if (!seen.insert(name).second) {
          throw ValidationError(source + ": duplicate header column", std::nullopt, name);
        }
      }
      continue;
    }
    if (cells.size() != header.size()) {
      throw ValidationError(source + ": expected " + std::to_string(header.size()) +
                                " cells, found " + std::to_string(cells.size()),
                            rows.size() + 1);
    }
    rows.push_back(std::move(cells));
  }
  if (!have_header) throw ValidationError(source + ": missing header row");
  return Table(source, std::move(header), std::move(rows));
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse(in, path.string());
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    const std::string& cell = cells[i];
    if (cell.find_first_of(",\"\\") != std::string::npos) {
      out << '"';
      for (char c : cell) {
        if (c == '"' || c == '\\') out << '\\';
        out << c;
      }
      out << '"';
    } else {
      out << cell;
    }
  }
  out << '\n';
}

}  // namespace csv
}  // namespace feval
