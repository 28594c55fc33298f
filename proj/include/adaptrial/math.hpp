#pragma once

#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "adaptrial/error.hpp"

namespace adaptrial {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Two-sided critical value z_{1 - alpha/2} for confidence level `level`.
inline double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0,1)");
  const boost::math::normal_distribution<double> std_normal;
  return boost::math::quantile(std_normal, 0.5 + 0.5 * level);
}

}  // namespace adaptrial
