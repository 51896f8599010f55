#pragma once

#include <compare>
#include <cstdio>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "vqm/error.hpp"

namespace vqm {

inline constexpr double kDefaultTMax = 30.0;
inline constexpr double kDefaultQMin = 16.0;

enum class Axis { FrameRateVariation, QuantizationVariation };

inline std::string_view to_string(Axis a) {
  return a == Axis::FrameRateVariation ? "FR" : "QS";
}

inline Axis parse_axis(std::string_view s) {
  if (s == "FR" || s == "fr") return Axis::FrameRateVariation;
  if (s == "QS" || s == "qs") return Axis::QuantizationVariation;
  throw DomainError("unknown axis '" + std::string(s) + "' (expected FR or QS)");
}

// One test configuration. Levels are ordered by quality: on the FR axis
// high_level = t_h and low_level = t_l; on the QS axis high_level = q_l (the
// finer stepsize) and low_level = q_h.
struct TestCondition {
  std::string sequence_id;
  Axis axis = Axis::FrameRateVariation;
  double high_level = 0.0;
  double low_level = 0.0;
  double switch_interval_s = 1.0;
  double fixed_other = 0.0;

  bool is_constant() const { return high_level == low_level; }

  auto operator<=>(const TestCondition&) const = default;
  bool operator==(const TestCondition&) const = default;
};

inline std::string describe(const TestCondition& c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s %s (%g, %g) Fz=%gs other=%g", c.sequence_id.c_str(),
                std::string(to_string(c.axis)).c_str(), c.high_level, c.low_level,
                c.switch_interval_s, c.fixed_other);
  return buf;
}

inline void validate(const TestCondition& c, double q_min = kDefaultQMin) {
  if (!(c.switch_interval_s > 0.0))
    throw DomainError(describe(c) + ": switch interval must be positive");
  if (!(c.fixed_other > 0.0)) throw DomainError(describe(c) + ": fixed level must be positive");
  if (c.axis == Axis::FrameRateVariation) {
    if (!(c.low_level > 0.0) || c.high_level < c.low_level)
      throw DomainError(describe(c) + ": frame rates must satisfy t_h >= t_l > 0");
  } else {
    if (c.high_level < q_min || c.low_level < c.high_level)
      throw DomainError(describe(c) + ": stepsizes must satisfy q_h >= q_l >= q_min");
  }
}

// `score` holds the raw 0..100 rating on input; zscore_normalize returns
// records whose score is the viewer-normalized z value.
struct RatingRecord {
  std::string viewer_id;
  TestCondition condition;
  double score = 0.0;

  bool operator==(const RatingRecord&) const = default;
};

inline void validate_raw(const RatingRecord& r) {
  if (!(r.score >= 0.0 && r.score <= 100.0))
    throw DomainError("viewer " + r.viewer_id + ": raw score " + std::to_string(r.score) +
                      " outside [0, 100]");
}

struct QualityEntry {
  double mos = 0.0;
  double normalized_q = 0.0;
  std::size_t n_ratings = 0;
  double std_dev = 0.0;
};

using QualityTable = std::map<TestCondition, QualityEntry>;

}  // namespace vqm
