#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vqm/error.hpp"
#include "vqm/stats.hpp"
#include "vqm/types.hpp"

namespace vqm {

namespace detail {

inline std::map<std::string, std::vector<double>> scores_by_viewer(
    const std::vector<RatingRecord>& ratings) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& r : ratings) out[r.viewer_id].push_back(r.score);
  return out;
}

}  // namespace detail

// Viewers whose scores cannot be z-normalized, with the reason.
inline std::map<std::string, std::string> find_degenerate_viewers(
    const std::vector<RatingRecord>& ratings) {
  std::map<std::string, std::string> out;
  for (const auto& [viewer, scores] : detail::scores_by_viewer(ratings)) {
    if (scores.size() < 2)
      out[viewer] = "fewer than 2 ratings";
    else if (sample_stddev(scores) == 0.0)
      out[viewer] = "zero score variance";
  }
  return out;
}

/// Replaces each score by (score - viewer mean) / viewer sample std, where the
/// statistics run over every score that viewer gave. Throws DomainError naming
/// the viewers whose block is degenerate.
inline std::vector<RatingRecord> zscore_normalize(const std::vector<RatingRecord>& ratings) {
  if (const auto bad = find_degenerate_viewers(ratings); !bad.empty()) {
    std::string msg = "zscore_normalize: cannot normalize viewer(s):";
    for (const auto& [viewer, why] : bad) msg += " " + viewer + " (" + why + ")";
    throw DomainError(msg);
  }
  std::map<std::string, std::pair<double, double>> moments;
  for (const auto& [viewer, scores] : detail::scores_by_viewer(ratings))
    moments[viewer] = {mean(scores), sample_stddev(scores)};

  std::vector<RatingRecord> out = ratings;
  for (auto& r : out) {
    const auto [m, s] = moments.at(r.viewer_id);
    r.score = (r.score - m) / s;
  }
  return out;
}

struct ObserverOutlierCounts {
  std::size_t above = 0;  // P
  std::size_t below = 0;  // Q
  std::size_t n_pvs = 0;  // N
  bool rejected = false;
};

/// ITU-R BT.500-11 observer screening in the z-score domain.
///
/// Per PVS the mean, sample standard deviation and kurtosis of the ratings set
/// the acceptance band: mean +/- 2 sigma when 2 <= kurtosis <= 4, otherwise
/// mean +/- sqrt(20) sigma. A viewer is rejected when more than 5% of their
/// ratings fall outside the band and the excursions are roughly balanced,
/// i.e. (P + Q) / N > 0.05 and |P - Q| / (P + Q) < 0.3.
inline std::map<std::string, ObserverOutlierCounts> bt500_observer_counts(
    const std::vector<RatingRecord>& z_ratings) {
  std::map<TestCondition, std::vector<const RatingRecord*>> by_pvs;
  for (const auto& r : z_ratings) by_pvs[r.condition].push_back(&r);

  std::map<std::string, ObserverOutlierCounts> counts;
  for (const auto& [cond, group] : by_pvs) {
    if (group.size() < 2)
      throw DomainError("bt500_screen: PVS " + describe(cond) + " has fewer than 2 ratings");
    std::vector<double> scores;
    scores.reserve(group.size());
    for (const auto* r : group) scores.push_back(r->score);

    const double mu = mean(scores);
    const double sigma = sample_stddev(scores);
    const double beta2 = kurtosis(scores);
    const double width = (beta2 >= 2.0 && beta2 <= 4.0) ? 2.0 : std::sqrt(20.0);
    const double upper = mu + width * sigma;
    const double lower = mu - width * sigma;

    for (const auto* r : group) {
      auto& c = counts[r->viewer_id];
      ++c.n_pvs;
      if (r->score >= upper)
        ++c.above;
      else if (r->score <= lower)
        ++c.below;
    }
  }
  for (auto& [viewer, c] : counts) {
    const double out = static_cast<double>(c.above + c.below);
    if (out == 0.0) continue;
    const double frac = out / static_cast<double>(c.n_pvs);
    const double skew =
        std::abs(static_cast<double>(c.above) - static_cast<double>(c.below)) / out;
    c.rejected = frac > 0.05 && skew < 0.3;
  }
  return counts;
}

inline std::set<std::string> bt500_screen(const std::vector<RatingRecord>& z_ratings) {
  std::set<std::string> rejected;
  for (const auto& [viewer, c] : bt500_observer_counts(z_ratings))
    if (c.rejected) rejected.insert(viewer);
  return rejected;
}

using ViewerSource = std::pair<std::string, std::string>;

struct ConsistencyOptions {
  double margin = 0.0;
  int violation_threshold = 2;
};

// True when `better` must be rated at least as high as `worse`: both are
// constant and `better` sits at the better level, or both share the base
// level (t_h, or q_l) and `better` alternates to the better second level.
// Only conditions sharing sequence, axis, switching interval and fixed level
// are comparable.
inline bool dominates(const TestCondition& better, const TestCondition& worse) {
  if (better.sequence_id != worse.sequence_id || better.axis != worse.axis ||
      better.switch_interval_s != worse.switch_interval_s ||
      better.fixed_other != worse.fixed_other)
    return false;
  // Higher FR is better; lower QS is better.
  const double sign = better.axis == Axis::FrameRateVariation ? 1.0 : -1.0;
  if (better.is_constant() && worse.is_constant())
    return sign * (better.high_level - worse.high_level) > 0.0;
  if (better.high_level != worse.high_level) return false;
  return sign * (better.low_level - worse.low_level) > 0.0;
}

/// Number of strictly comparable condition pairs each (viewer, source) block
/// rated in the wrong order by more than `margin` raw points.
inline std::map<ViewerSource, int> consistency_violations(
    const std::vector<RatingRecord>& raw_ratings, double margin) {
  // Repeated ratings of one condition by one viewer are averaged first.
  std::map<ViewerSource, std::map<TestCondition, std::pair<double, int>>> blocks;
  for (const auto& r : raw_ratings) {
    auto& slot = blocks[{r.viewer_id, r.condition.sequence_id}][r.condition];
    slot.first += r.score;
    slot.second += 1;
  }
  std::map<ViewerSource, int> out;
  for (const auto& [key, conds] : blocks) {
    std::vector<std::pair<TestCondition, double>> rated;
    for (const auto& [c, acc] : conds) rated.emplace_back(c, acc.first / acc.second);
    int violations = 0;
    for (const auto& [a, sa] : rated)
      for (const auto& [b, sb] : rated)
        if (dominates(a, b) && sb > sa + margin) ++violations;
    out[key] = violations;
  }
  return out;
}

inline std::set<ViewerSource> consistency_screen(const std::vector<RatingRecord>& raw_ratings,
                                                 int violation_threshold, double margin = 0.0) {
  std::set<ViewerSource> drop;
  for (const auto& [key, n] : consistency_violations(raw_ratings, margin))
    if (n > violation_threshold) drop.insert(key);
  return drop;
}

inline bool is_reference(const TestCondition& c, double t_max, double q_min) {
  const double ref = c.axis == Axis::FrameRateVariation ? t_max : q_min;
  return c.high_level == ref && c.low_level == ref;
}

// Normalization group: every condition is divided by the reference condition
// with the same sequence, axis, switching interval and fixed level.
inline TestCondition reference_for(const TestCondition& c, double t_max, double q_min) {
  TestCondition ref = c;
  ref.high_level = ref.low_level = c.axis == Axis::FrameRateVariation ? t_max : q_min;
  return ref;
}

/// MOS per condition from raw scores, plus Q = MOS / MOS(reference).
inline QualityTable compute_quality_table(const std::vector<RatingRecord>& screened,
                                          double t_max = kDefaultTMax,
                                          double q_min = kDefaultQMin) {
  std::map<TestCondition, std::vector<double>> by_cond;
  for (const auto& r : screened) by_cond[r.condition].push_back(r.score);

  QualityTable table;
  for (const auto& [cond, scores] : by_cond)
    table[cond] = QualityEntry{mean(scores), 0.0, scores.size(), sample_stddev(scores)};

  for (auto& [cond, entry] : table) {
    const auto ref = table.find(reference_for(cond, t_max, q_min));
    if (ref == table.end())
      throw DomainError("compute_quality_table: no reference condition for group " +
                        describe(reference_for(cond, t_max, q_min)));
    if (ref->second.mos <= 0.0)
      throw DomainError("compute_quality_table: reference MOS is not positive for " +
                        describe(ref->first));
    entry.normalized_q = entry.mos / ref->second.mos;
  }
  return table;
}

struct ScreeningOptions {
  ConsistencyOptions consistency;
};

struct ScreeningReport {
  std::vector<RatingRecord> survivors;
  std::map<std::string, std::string> degenerate_viewers;
  std::map<std::string, ObserverOutlierCounts> bt500_counts;
  std::set<std::string> bt500_rejected;
  std::map<ViewerSource, int> violations;
  std::set<ViewerSource> dropped_blocks;
};

/// Full post-screening chain: viewers that cannot be z-normalized are set
/// aside, BT.500 runs on z-scores, then the consistency screen runs on the raw
/// scores of the remaining viewers.
inline ScreeningReport screen_ratings(const std::vector<RatingRecord>& raw,
                                      const ScreeningOptions& opts = {}) {
  ScreeningReport rep;
  rep.degenerate_viewers = find_degenerate_viewers(raw);

  std::vector<RatingRecord> usable;
  for (const auto& r : raw)
    if (!rep.degenerate_viewers.contains(r.viewer_id)) usable.push_back(r);

  if (!usable.empty()) {
    rep.bt500_counts = bt500_observer_counts(zscore_normalize(usable));
    for (const auto& [viewer, c] : rep.bt500_counts)
      if (c.rejected) rep.bt500_rejected.insert(viewer);
  }

  std::vector<RatingRecord> stage2;
  for (const auto& r : usable)
    if (!rep.bt500_rejected.contains(r.viewer_id)) stage2.push_back(r);

  rep.violations = consistency_violations(stage2, opts.consistency.margin);
  for (const auto& [key, n] : rep.violations)
    if (n > opts.consistency.violation_threshold) rep.dropped_blocks.insert(key);

  for (const auto& r : stage2)
    if (!rep.dropped_blocks.contains({r.viewer_id, r.condition.sequence_id}))
      rep.survivors.push_back(r);
  return rep;
}

}  // namespace vqm
