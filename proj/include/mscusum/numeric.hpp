#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace mscusum {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(e^a + e^b) without overflow; either argument may be -inf.
inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

/// log(sum_i e^{v_i}); -inf for an empty span.
inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// log(1 - pi + pi * e^d) for pi in (0, 1].
inline double log_mix(double pi, double d) {
  if (pi >= 1.0) return d;
  return log_add_exp(std::log1p(-pi), std::log(pi) + d);
}

// Standard normal density and distribution function. Phi goes through
// std::erfc, which is correctly rounded to within an ulp or two on glibc,
// so the renewal constants built from it are stable far below 1e-10.
inline double normal_pdf(double x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

}  // namespace mscusum
