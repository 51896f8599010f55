#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "vqm/error.hpp"

namespace vqm::csv {

/// Six significant digits, the precision of every numeric output.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// `v` rounded to six significant digits.
inline double round6(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(fmt(v).c_str(), nullptr);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Splits one line on commas; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw IoError("line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(trim(cur));
  return out;
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

// A data row with access by header name. Parse failures report the line.
class Row {
 public:
  Row(const std::map<std::string, std::size_t>* cols, std::vector<std::string> cells,
      std::size_t line_no)
      : cols_(cols), cells_(std::move(cells)), line_(line_no) {}

  std::size_t line() const { return line_; }

  const std::string& str(const std::string& name) const {
    auto it = cols_->find(name);
    if (it == cols_->end()) fail("missing column '" + name + "'");
    if (cells_[it->second].empty()) fail("empty value in column '" + name + "'");
    return cells_[it->second];
  }

  double num(const std::string& name) const {
    const std::string& s = str(name);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
      fail("column '" + name + "': '" + s + "' is not a finite number");
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw IoError("line " + std::to_string(line_) + ": " + msg);
  }

 private:
  const std::map<std::string, std::size_t>* cols_;
  std::vector<std::string> cells_;
  std::size_t line_;
};

class Table {
 public:
  /// Reads a header row followed by data rows. Blank lines are skipped.
  static Table read(std::istream& in, const std::vector<std::string>& required) {
    Table t;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      if (trim(line).empty()) continue;
      auto cells = split_line(line, line_no);
      if (!have_header) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (!t.columns_.emplace(cells[i], i).second)
            throw IoError("line " + std::to_string(line_no) + ": duplicate column '" + cells[i] + "'");
          t.header_.push_back(cells[i]);
        }
        for (const auto& r : required)
          if (!t.columns_.contains(r))
            throw IoError("line " + std::to_string(line_no) + ": missing column '" + r + "'");
        have_header = true;
        continue;
      }
      if (cells.size() != t.header_.size())
        throw IoError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header_.size()) + " fields, found " +
                      std::to_string(cells.size()));
      t.raw_.push_back({std::move(cells), line_no});
    }
    if (!have_header) throw IoError("empty CSV input (no header row)");
    return t;
  }

  const std::vector<std::string>& header() const { return header_; }

  std::vector<Row> rows() const {
    std::vector<Row> out;
    for (const auto& [cells, line] : raw_) out.emplace_back(&columns_, cells, line);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::map<std::string, std::size_t> columns_;
  std::vector<std::pair<std::vector<std::string>, std::size_t>> raw_;
};

inline void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << quote(cells[i]);
  out << '\n';
}

}  // namespace vqm::csv
