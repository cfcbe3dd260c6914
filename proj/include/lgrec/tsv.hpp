#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lgrec/common.hpp"

namespace lgrec {

inline std::vector<std::string_view> split_view(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

// Shortest representation that round-trips the exact double value.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

// Hexadecimal float, exact round-trip through strtod.
inline std::string format_double_hex(double x) {
  char buf[64];
  int n = std::snprintf(buf, sizeof(buf), "%a", x);
  return std::string(buf, n);
}

inline double parse_double(std::string_view field, const std::string& path, size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw Error(path + ":" + std::to_string(line_no) + ": not a number: '" + std::string(field) + "'");
  return value;
}

inline uint64_t parse_u64(std::string_view field, const std::string& path, size_t line_no) {
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw Error(path + ":" + std::to_string(line_no) + ": not a non-negative integer: '" +
                std::string(field) + "'");
  return value;
}

// Calls fn(fields, line_no) for every data line. '#'-prefixed and blank
// lines are skipped; line numbers are 1-based over the raw file.
inline void for_each_tsv_row(const std::string& path,
                             const std::function<void(const std::vector<std::string_view>&, size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fn(split_view(line, '\t'), line_no);
  }
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  return out;
}

}  // namespace lgrec
