#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace modeseek {

/// Probabilists' Hermite polynomial He_m(x), via He_{m+1} = x He_m - m He_{m-1}.
inline double hermite_he(int m, double x) {
  if (m < 0) throw std::invalid_argument("hermite order must be >= 0");
  if (m == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int k = 1; k < m; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Standard normal density.
inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace modeseek
