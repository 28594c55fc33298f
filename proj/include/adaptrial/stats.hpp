#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "adaptrial/error.hpp"

namespace adaptrial {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample variance with denominator R - 1 (0 for fewer than two values).
inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_distance: samples must be nonempty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

// Equal-width bins; the last bin is closed on the right. Values outside an
// explicit range are dropped.
inline Histogram histogram_export(const std::vector<double>& values, std::size_t bins,
                                  std::optional<std::pair<double, double>> range = std::nullopt) {
  if (bins < 1) throw ConfigError("histogram: bins must be >= 1");
  double lo = 0.0, hi = 1.0;
  if (range) {
    lo = range->first;
    hi = range->second;
    if (!(lo < hi)) throw ConfigError("histogram: range requires lo < hi");
  } else if (!values.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t k = 0; k <= bins; ++k)
    h.edges.push_back(k == bins ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins));
  for (double v : values) {
    if (v < lo || v > hi) continue;
    auto k = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    k = std::min(k, bins - 1);
    while (k > 0 && v < h.edges[k]) --k;
    while (k + 1 < bins && v >= h.edges[k + 1]) ++k;
    ++h.counts[k];
  }
  return h;
}

}  // namespace adaptrial
