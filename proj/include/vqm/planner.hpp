#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vqm/error.hpp"
#include "vqm/models.hpp"

namespace vqm {

// One encodable operating point.
struct Config {
  double fr = 0.0;
  double qs = 0.0;

  auto operator<=>(const Config&) const = default;
  bool operator==(const Config&) const = default;
};

inline std::string describe(const Config& c) {
  return "(" + format_level(c.fr) + " Hz, QS " + format_level(c.qs) + ")";
}

// Bitrates in kbps per sequence and operating point.
class RateTable {
 public:
  void add(const std::string& sequence_id, Config c, double kbps) {
    if (!(kbps > 0.0) || !std::isfinite(kbps))
      throw DomainError("rate table: bitrate must be positive for " + sequence_id + " " +
                        describe(c));
    if (!(c.fr > 0.0) || !(c.qs > 0.0))
      throw DomainError("rate table: frame rate and stepsize must be positive");
    if (!rates_[sequence_id].emplace(c, kbps).second)
      throw DomainError("rate table: duplicate entry for " + sequence_id + " " + describe(c));
  }

  // Bitrate must rise with frame rate at fixed stepsize and fall with stepsize
  // at fixed frame rate.
  void validate() const {
    for (const auto& [seq, points] : rates_) {
      for (auto a = points.begin(); a != points.end(); ++a)
        for (auto b = std::next(a); b != points.end(); ++b) {
          const auto& [ca, ra] = *a;
          const auto& [cb, rb] = *b;
          if (ca.qs == cb.qs && ca.fr != cb.fr && (ca.fr < cb.fr) != (ra < rb))
            throw DomainError("rate table: bitrate not increasing with frame rate for " + seq +
                              " at QS " + format_level(ca.qs));
          if (ca.fr == cb.fr && ca.qs != cb.qs && (ca.qs < cb.qs) != (ra > rb))
            throw DomainError("rate table: bitrate not decreasing with stepsize for " + seq +
                              " at " + format_level(ca.fr) + " Hz");
        }
    }
  }

  const std::map<Config, double>& points(const std::string& sequence_id) const {
    auto it = rates_.find(sequence_id);
    if (it == rates_.end()) throw DomainError("rate table: unknown sequence " + sequence_id);
    return it->second;
  }

  bool contains(const std::string& sequence_id) const { return rates_.contains(sequence_id); }
  const std::map<std::string, std::map<Config, double>>& all() const { return rates_; }

 private:
  std::map<std::string, std::map<Config, double>> rates_;
};

enum class PlanAxis { VaryQS, VaryFR, StayConstant };

inline std::string_view to_string(PlanAxis a) {
  switch (a) {
    case PlanAxis::VaryQS: return "VaryQS";
    case PlanAxis::VaryFR: return "VaryFR";
    case PlanAxis::StayConstant: return "StayConstant";
  }
  return "?";
}

inline const std::string kClampFrameRate = "FR≤2·t_l";
inline const std::string kClampStepsize = "QS≥0.4·q_h";

struct AdaptationPlan {
  PlanAxis axis = PlanAxis::StayConstant;
  Config high_config;
  Config low_config;
  double high_rate_kbps = 0.0;
  double low_rate_kbps = 0.0;
  double predicted_quality = 0.0;
  std::vector<std::string> clamps_applied;
  // High phase below (t_max, q_min): the FR-vs-QS preference is untested there.
  bool outside_evidence = false;
};

struct PlanResult {
  AdaptationPlan chosen;
  std::vector<AdaptationPlan> candidates;
  std::vector<std::string> warnings;
};

struct Schedule {
  Config high;
  Config low;
  double fz_s = 3.0;
};

/// Predicted quality of a two-phase schedule that varies at most one axis.
/// Frame-rate schedules are scored at q_min and stepsize schedules at t_max,
/// the operating points the models were built on.
inline double score_schedule(const Schedule& s, const ModelParams& p) {
  const Config& a = s.high;
  const Config& b = s.low;
  if (a == b) {
    if (a.qs == p.q_min) return mnqt_c(a.fr, p);
    if (a.fr == p.t_max) return mnqq_c(a.qs, p);
    throw DomainError("score_schedule: no constant-quality model for " + describe(a) +
                      " (needs QS = q_min or FR = t_max)");
  }
  if (a.fr != b.fr && a.qs != b.qs)
    throw DomainError("score_schedule: schedules varying frame rate and stepsize together are "
                      "not supported");
  if (a.fr != b.fr) {
    if (a.qs != p.q_min)
      throw DomainError("score_schedule: frame-rate variation is modeled only at QS = q_min");
    return qtv(std::max(a.fr, b.fr), std::min(a.fr, b.fr), p);
  }
  if (a.fr != p.t_max)
    throw DomainError("score_schedule: stepsize variation is modeled only at FR = t_max");
  return qqv(std::max(a.qs, b.qs), std::min(a.qs, b.qs), s.fz_s, p);
}

namespace detail {

inline int plan_rank(PlanAxis a) {
  return a == PlanAxis::VaryQS ? 0 : a == PlanAxis::VaryFR ? 1 : 2;
}

inline constexpr double kQualityTie = 1e-12;

}  // namespace detail

/// Chooses between staying at the best constant point for r_low and
/// alternating along one axis between points fitting r_low and r_high.
///
/// Alternation is limited before scoring: the high frame rate to at most twice
/// the low one, and the fine stepsize to the smallest ladder value at least
/// 0.4 times the coarse one. Candidates whose parameters are missing are
/// skipped with a warning. Ties prefer VaryQS, then VaryFR, then StayConstant.
inline PlanResult plan(const RateTable& rates, const std::string& sequence_id, double r_high,
                       double r_low, double fz_s, const ModelParams& params,
                       const std::vector<Config>& ladder) {
  if (ladder.empty()) throw DomainError("plan: empty ladder");
  if (!(r_low > 0.0) || r_high < r_low)
    throw DomainError("plan: need 0 < r_low <= r_high");
  const auto& table = rates.points(sequence_id);

  PlanResult res;
  std::map<Config, double> usable;
  for (const auto& c : ladder) {
    auto it = table.find(c);
    if (it == table.end()) {
      res.warnings.push_back("ladder point " + describe(c) + " has no bitrate; ignored");
      continue;
    }
    usable.emplace(c, it->second);
  }
  const bool low_feasible = std::any_of(usable.begin(), usable.end(),
                                        [&](const auto& kv) { return kv.second <= r_low; });
  if (!low_feasible)
    throw DomainError("plan: infeasible, no ladder point fits r_low = " + format_level(r_low) +
                      " kbps");

  auto try_score = [&](AdaptationPlan cand) {
    try {
      cand.predicted_quality = score_schedule({cand.high_config, cand.low_config, fz_s}, params);
      cand.high_rate_kbps = usable.at(cand.high_config);
      cand.low_rate_kbps = usable.at(cand.low_config);
      cand.outside_evidence = cand.high_config.fr < params.t_max || cand.high_config.qs > params.q_min;
      res.candidates.push_back(std::move(cand));
    } catch (const DomainError& e) {
      res.warnings.push_back(std::string(to_string(cand.axis)) + " candidate " +
                             describe(cand.high_config) + "/" + describe(cand.low_config) +
                             " skipped: " + e.what());
    }
  };

  // Constant: best single point that fits the low budget.
  {
    std::optional<AdaptationPlan> best;
    for (const auto& [c, r] : usable) {
      if (r > r_low) continue;
      if (c.qs != params.q_min && c.fr != params.t_max) continue;
      try {
        AdaptationPlan cand;
        cand.axis = PlanAxis::StayConstant;
        cand.high_config = cand.low_config = c;
        cand.predicted_quality = score_schedule({c, c, fz_s}, params);
        if (!best || cand.predicted_quality > best->predicted_quality) best = cand;
      } catch (const DomainError& e) {
        res.warnings.push_back("constant candidate " + describe(c) + " skipped: " + e.what());
      }
    }
    if (best) try_score(*best);
  }

  // Frame-rate alternation at QS = q_min.
  {
    std::vector<std::pair<double, double>> frs;  // (fr, rate), ascending fr
    for (const auto& [c, r] : usable)
      if (c.qs == params.q_min) frs.emplace_back(c.fr, r);
    std::sort(frs.begin(), frs.end());
    auto best_fr = [&](double budget, double cap) -> std::optional<double> {
      std::optional<double> out;
      for (const auto& [fr, r] : frs)
        if (r <= budget && fr <= cap) out = fr;
      return out;
    };
    const auto t_l = best_fr(r_low, params.t_max);
    if (t_l) {
      auto t_h = best_fr(r_high, params.t_max);
      AdaptationPlan cand;
      cand.axis = PlanAxis::VaryFR;
      if (*t_h > 2.0 * *t_l) {
        t_h = best_fr(r_high, 2.0 * *t_l);
        cand.clamps_applied.push_back(kClampFrameRate);
      }
      if (*t_h > *t_l) {
        cand.high_config = {*t_h, params.q_min};
        cand.low_config = {*t_l, params.q_min};
        try_score(std::move(cand));
      }
    }
  }

  // Stepsize alternation at FR = t_max.
  {
    std::vector<std::pair<double, double>> qss;  // (qs, rate), ascending qs
    for (const auto& [c, r] : usable)
      if (c.fr == params.t_max) qss.emplace_back(c.qs, r);
    std::sort(qss.begin(), qss.end());
    auto best_qs = [&](double budget, double floor) -> std::optional<double> {
      for (const auto& [qs, r] : qss)
        if (r <= budget && qs >= floor) return qs;
      return std::nullopt;
    };
    const auto q_h = best_qs(r_low, params.q_min);
    if (q_h) {
      auto q_l = best_qs(r_high, params.q_min);
      AdaptationPlan cand;
      cand.axis = PlanAxis::VaryQS;
      if (*q_l < 0.4 * *q_h) {
        q_l = best_qs(r_high, 0.4 * *q_h);
        cand.clamps_applied.push_back(kClampStepsize);
      }
      if (*q_l < *q_h) {
        cand.high_config = {params.t_max, *q_l};
        cand.low_config = {params.t_max, *q_h};
        try_score(std::move(cand));
      }
    }
  }

  if (res.candidates.empty())
    throw DomainError("plan: no candidate could be scored for " + sequence_id);

  std::stable_sort(res.candidates.begin(), res.candidates.end(),
                   [](const AdaptationPlan& a, const AdaptationPlan& b) {
                     return detail::plan_rank(a.axis) < detail::plan_rank(b.axis);
                   });
  const AdaptationPlan* chosen = &res.candidates.front();
  for (const auto& c : res.candidates)
    if (c.predicted_quality > chosen->predicted_quality + detail::kQualityTie) chosen = &c;
  res.chosen = *chosen;
  return res;
}

// Every ladder point of `sequence_id` present in the rate table.
inline std::vector<Config> full_ladder(const RateTable& rates, const std::string& sequence_id) {
  std::vector<Config> out;
  for (const auto& [c, r] : rates.points(sequence_id)) out.push_back(c);
  return out;
}

}  // namespace vqm
