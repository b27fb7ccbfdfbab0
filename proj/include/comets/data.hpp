#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "comets/error.hpp"
#include "comets/matrix.hpp"

namespace comets {

// Named numeric columns of equal length. Immutable once built.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<std::string> names, std::vector<std::vector<double>> columns)
      : names_(std::move(names)), columns_(std::move(columns)) {
    if (names_.size() != columns_.size()) throw SchemaError("dataset: names and columns differ in count");
    std::set<std::string> seen;
    for (const auto& name : names_) {
      if (!seen.insert(name).second) throw SchemaError("dataset: duplicate column name '" + name + "'");
    }
    n_ = columns_.empty() ? 0 : columns_.front().size();
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (columns_[j].size() != n_) throw SchemaError("dataset: column '" + names_[j] + "' has a different length");
      for (std::size_t i = 0; i < n_; ++i) {
        if (!std::isfinite(columns_[j][i])) {
          throw DomainError("dataset: non-finite value in column '" + names_[j] + "' at row " + std::to_string(i + 1));
        }
      }
    }
  }

  std::size_t n() const { return n_; }
  std::size_t width() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& column(std::size_t j) const { return columns_.at(j); }

  bool has(const std::string& name) const { return find(name) < names_.size(); }

  std::size_t index_of(const std::string& name) const {
    const std::size_t j = find(name);
    if (j == names_.size()) throw RoleError("unknown column '" + name + "'");
    return j;
  }

  const std::vector<double>& column(const std::string& name) const { return columns_[index_of(name)]; }

  NumericMatrix matrix(const std::vector<std::string>& names) const {
    NumericMatrix m(n_, names.size());
    for (std::size_t c = 0; c < names.size(); ++c) {
      const auto& col = column(names[c]);
      for (std::size_t i = 0; i < n_; ++i) m(i, c) = col[i];
    }
    return m;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t find(const std::string& name) const {
    for (std::size_t j = 0; j < names_.size(); ++j)
      if (names_[j] == name) return j;
    return names_.size();
  }

  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::size_t n_ = 0;
};

// Partition of columns into response (Y), candidate (X) and conditioning (Z) blocks.
struct ColumnRoles {
  std::string response;
  std::vector<std::string> candidate;
  std::vector<std::string> conditioning;
};

inline void validate_roles(const Dataset& ds, const ColumnRoles& roles) {
  if (roles.candidate.empty()) throw RoleError("candidate block is empty");
  std::set<std::string> seen;
  auto claim = [&](const std::string& name, const char* role) {
    ds.index_of(name);
    if (!seen.insert(name).second) throw RoleError("column '" + name + "' assigned twice (" + role + ")");
  };
  claim(roles.response, "response");
  for (const auto& c : roles.candidate) claim(c, "candidate");
  for (const auto& c : roles.conditioning) claim(c, "conditioning");
}

struct Blocks {
  std::vector<double> y;
  NumericMatrix X;
  NumericMatrix Z;  // may have zero columns
};

inline Blocks select_blocks(const Dataset& ds, const ColumnRoles& roles) {
  validate_roles(ds, roles);
  return Blocks{ds.column(roles.response), ds.matrix(roles.candidate), ds.matrix(roles.conditioning)};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool is_missing_marker(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" || cell == "null" ||
         cell == "NULL";
}

}  // namespace detail

// Parses CSV text: a header row followed by numeric rows. `source` names the
// input in error messages.
inline Dataset parse_csv(std::istream& in, const std::string& source = "<csv>") {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty file, expected a header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::vector<std::string> names;
  for (auto cell : detail::split_commas(line)) names.emplace_back(cell);
  {
    std::set<std::string> seen;
    for (const auto& name : names) {
      if (name.empty()) throw SchemaError(source + ": empty column name in header");
      if (!seen.insert(name).second) throw SchemaError(source + ": duplicate header '" + name + "'");
    }
  }

  std::vector<std::vector<double>> columns(names.size());
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto cells = detail::split_commas(line);
    if (cells.size() != names.size()) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(names.size()) +
                       " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto cell = cells[j];
      const std::string where = source + ": row " + std::to_string(row) + " (line " + std::to_string(line_no) +
                                "), column '" + names[j] + "'";
      if (detail::is_missing_marker(cell)) {
        throw MissingValueError(where + ": missing values unsupported (cell '" + std::string(cell) + "')");
      }
      double value = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw ParseError(where + ": cannot parse '" + std::string(cell) + "' as a finite number");
      }
      columns[j].push_back(value);
    }
  }
  if (row == 0) throw ParseError(source + ": no data rows");
  return Dataset(std::move(names), std::move(columns));
}

inline Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_csv(in, path);
}

// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_csv(std::ostream& out, const Dataset& ds) {
  const auto& names = ds.names();
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << format_double(ds.column(j)[i]);
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_csv(out, ds);
}

}  // namespace comets
