#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>

#include "vqm/error.hpp"

namespace vqm {

inline double mean(std::span<const double> v) {
  if (v.empty()) throw DomainError("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Unbiased (n - 1) standard deviation. Returns 0 for a single value.
inline double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Pearson moment ratio m4 / m2^2 with population central moments.
inline double kurtosis(std::span<const double> v) {
  const double m = mean(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d2 = (x - m) * (x - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  const auto n = static_cast<double>(v.size());
  m2 /= n;
  m4 /= n;
  if (m2 == 0.0) return 0.0;
  return m4 / (m2 * m2);
}

/// Pearson correlation between predictions and measurements.
inline double pcc(std::span<const double> pred, std::span<const double> meas) {
  if (pred.size() != meas.size())
    throw DomainError("pcc: length mismatch (" + std::to_string(pred.size()) + " vs " +
                      std::to_string(meas.size()) + ")");
  if (pred.size() < 2) throw DomainError("pcc: need at least 2 points");
  const double mp = mean(pred), mm = mean(meas);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dp = pred[i] - mp, dm = meas[i] - mm;
    sxy += dp * dm;
    sxx += dp * dp;
    syy += dm * dm;
  }
  if (sxx == 0.0) throw DomainError("pcc: prediction vector has zero variance");
  if (syy == 0.0) throw DomainError("pcc: measurement vector has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

/// Root-mean-square error between predictions and measurements.
inline double rmse(std::span<const double> pred, std::span<const double> meas) {
  if (pred.size() != meas.size())
    throw DomainError("rmse: length mismatch (" + std::to_string(pred.size()) + " vs " +
                      std::to_string(meas.size()) + ")");
  if (pred.empty()) throw DomainError("rmse: need at least 1 point");
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) ss += (pred[i] - meas[i]) * (pred[i] - meas[i]);
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

}  // namespace vqm
