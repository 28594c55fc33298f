#pragma once

#include <charconv>
#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "adaptrial/error.hpp"
#include "adaptrial/stats.hpp"

namespace adaptrial {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(where + ": not a number: '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s, const std::string& where) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(where + ": not an integer: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "bin_left,bin_right,count\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    os << format_double(h.edges[k]) << ',' << format_double(h.edges[k + 1]) << ',' << h.counts[k] << '\n';
}

}  // namespace adaptrial
