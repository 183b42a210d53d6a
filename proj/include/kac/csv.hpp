#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "kac/errors.hpp"

namespace kac::csv {

// RFC 4180: quote fields containing a comma, quote, CR or LF; double quotes.
inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string cell(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
inline std::string cell(const std::string& s) { return quote(s); }
inline std::string cell(const char* s) { return quote(s); }
inline std::string cell(bool b) { return b ? "true" : "false"; }
template <class T>
  requires std::is_integral_v<T>
inline std::string cell(T x) {
  return std::to_string(x);
}

/// In-memory table with a fixed column order.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  template <class... Cells>
  void add(const Cells&... cells) {
    static_assert(sizeof...(Cells) > 0);
    if (sizeof...(Cells) != columns_.size()) throw ContractViolation("csv row has the wrong number of cells");
    std::string line;
    bool first = true;
    ((line += first ? "" : ",", line += cell(cells), first = false), ...);
    rows_.push_back(std::move(line));
  }

  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }

  std::string header() const {
    std::string h;
    for (std::size_t i = 0; i < columns_.size(); ++i) h += (i ? "," : "") + quote(columns_[i]);
    return h + "\n";
  }

  /// Rows only, one per line.
  std::string body() const {
    std::string b;
    for (const auto& r : rows_) b += r + "\n";
    return b;
  }

  std::string str() const { return header() + body(); }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
};

}  // namespace kac::csv
