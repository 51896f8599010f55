#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "vqm/error.hpp"

namespace vqm {

namespace detail {

// Continued fraction for I_x(a, b), evaluated with the modified Lentz method.
// Converges fast for x < (a + 1) / (a + b + 2).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    // even step
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    // odd step
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw DomainError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1].
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw DomainError("incomplete beta: shape parameters must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Upper tail P(F > f) of the F distribution with (df1, df2) degrees of freedom.
inline double f_sf(double f, int df1, int df2) {
  if (df1 < 1 || df2 < 1) throw DomainError("f_sf: degrees of freedom must be >= 1");
  if (std::isnan(f) || f < 0.0) throw DomainError("f_sf: F must be non-negative");
  if (f == 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  const double d1 = df1, d2 = df2;
  return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

/// Lower tail P(F <= f).
inline double f_cdf(double f, int df1, int df2) {
  if (df1 < 1 || df2 < 1) throw DomainError("f_cdf: degrees of freedom must be >= 1");
  if (std::isnan(f) || f < 0.0) throw DomainError("f_cdf: F must be non-negative");
  if (f == 0.0) return 0.0;
  if (std::isinf(f)) return 1.0;
  const double d1 = df1, d2 = df2;
  return regularized_incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * f / (d2 + d1 * f));
}

}  // namespace vqm
