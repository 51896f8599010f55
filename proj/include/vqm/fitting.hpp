#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vqm/error.hpp"
#include "vqm/models.hpp"
#include "vqm/ratings.hpp"
#include "vqm/stats.hpp"
#include "vqm/types.hpp"

namespace vqm {

inline constexpr double kAlphaLower = 1e-4;
inline constexpr double kAlphaUpper = 200.0;

struct ScalarMinimum {
  double x;
  double fx;
  int iterations;
};

/// Brent's bounded minimization (golden section with parabolic steps) of
/// `f` on [lo, hi]. Converges when the bracket half-width falls under
/// 2 * (rel_tol * |x| + abs_tol).
template <class F>
ScalarMinimum minimize_bounded(F&& f, double lo, double hi, double abs_tol = 1e-10,
                               int max_iter = 500) {
  constexpr double kGolden = 0.3819660112501051;  // (3 - sqrt 5) / 2
  constexpr double kRelTol = 1.4901161193847656e-08;  // sqrt(machine eps)
  double a = lo, b = hi;
  double x = a + kGolden * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    const double tol = kRelTol * std::abs(x) + abs_tol;
    const double tol2 = 2.0 * tol;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;

    bool golden = true;
    if (std::abs(e) > tol) {
      // Parabola through (v, fv), (w, fw), (x, fx).
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = x < m ? tol : -tol;
        golden = false;
      }
    }
    if (golden) {
      e = (x < m ? b : a) - x;
      d = kGolden * e;
    }
    const double u = std::abs(d) >= tol ? x + d : x + (d > 0.0 ? tol : -tol);
    const double fu = f(u);
    if (fu <= fx) {
      (u < x ? b : a) = x;
      v = w, fv = fw;
      w = x, fw = fx;
      x = u, fx = fu;
    } else {
      (u < x ? a : b) = u;
      if (fu <= fw || w == x) {
        v = w, fv = fw;
        w = u, fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u, fv = fu;
      }
    }
  }
  return {x, fx, it};
}

struct FitPoint {
  double x;
  double y;
};

struct FitResult {
  double alpha = 0.0;
  std::optional<double> pcc;  // empty when measurements or predictions are constant
  double rmse = 0.0;
  std::size_t n_points = 0;
  std::vector<double> residuals;  // measured - model, in input order
  bool at_bound = false;
};

inline double sse(const std::vector<FitPoint>& pts, double alpha) {
  double s = 0.0;
  for (const auto& p : pts) {
    const double r = p.y - inverted_exponential(p.x, alpha);
    s += r * r;
  }
  return s;
}

/// Least-squares alpha for y ~ (1 - e^{-alpha x}) / (1 - e^{-alpha}).
///
/// A 64-point log-spaced scan over [1e-4, 200] picks the basin, then Brent
/// refines inside the neighbouring grid cells.
inline FitResult fit_inverted_exponential(const std::vector<FitPoint>& pts) {
  if (pts.size() < 2) throw DomainError("fit: need at least 2 points");
  for (const auto& p : pts) {
    if (!std::isfinite(p.y)) throw DomainError("fit: non-finite measurement");
    if (!std::isfinite(p.x)) throw DomainError("fit: non-finite abscissa");
  }
  if (std::all_of(pts.begin(), pts.end(), [&](const FitPoint& p) { return p.x == pts[0].x; }))
    throw DomainError("fit: all x values are equal; alpha is not identifiable");

  constexpr int kGrid = 64;
  const double log_lo = std::log(kAlphaLower), log_hi = std::log(kAlphaUpper);
  std::vector<double> grid(kGrid);
  for (int i = 0; i < kGrid; ++i)
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * i / (kGrid - 1));
  grid.front() = kAlphaLower;
  grid.back() = kAlphaUpper;

  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double s = sse(pts, grid[i]);
    if (s < best_sse) best_sse = s, best = i;
  }
  const double lo = grid[std::max(best - 1, 0)];
  const double hi = grid[std::min(best + 1, kGrid - 1)];
  auto m = minimize_bounded([&](double a) { return sse(pts, a); }, lo, hi, 1e-10);
  // Brent never evaluates the bracket ends; keep the grid point if it wins.
  if (best_sse < m.fx) m = {grid[best], best_sse, m.iterations};

  FitResult r;
  r.alpha = m.x;
  r.n_points = pts.size();
  std::vector<double> pred, meas;
  for (const auto& p : pts) {
    pred.push_back(inverted_exponential(p.x, r.alpha));
    meas.push_back(p.y);
    r.residuals.push_back(p.y - pred.back());
  }
  r.rmse = rmse(pred, meas);
  if (sample_stddev(meas) > 0.0 && sample_stddev(pred) > 0.0) r.pcc = pcc(pred, meas);
  r.at_bound = r.alpha - kAlphaLower < 1e-6 || kAlphaUpper - r.alpha < 1e-6;
  return r;
}

// One measured point on a fitted curve, with the condition it came from.
struct CurvePoint {
  TestCondition condition;
  double x;
  double y_measured;
  double y_model;
};

struct CurveFit {
  std::string curve;  // "mnqt_c", "mnqt_v:30", "mnqq_c", "mnqq_v:fast:16", ...
  FitResult fit;
  std::vector<CurvePoint> points;
};

// Goodness of fit of the full two-factor model against every measured Q.
struct OverallFit {
  std::optional<double> pcc;
  double rmse = 0.0;
  std::size_t n_points = 0;
  std::vector<CurvePoint> points;  // x = average level / reference, as plotted
};

struct AxisFit {
  std::string sequence_id;
  Axis axis = Axis::FrameRateVariation;
  ModelParams params;
  std::vector<CurveFit> curves;
  OverallFit overall;
};

inline std::set<std::string> sequences_in(const QualityTable& table) {
  std::set<std::string> ids;
  for (const auto& [c, e] : table) ids.insert(c.sequence_id);
  return ids;
}

inline QualityTable select_sequence(const QualityTable& table, const std::string& id) {
  QualityTable out;
  for (const auto& [c, e] : table)
    if (c.sequence_id == id) out.emplace(c, e);
  return out;
}

namespace detail {

inline std::string single_sequence(const QualityTable& table, Axis axis, const char* who) {
  std::set<std::string> ids;
  for (const auto& [c, e] : table)
    if (c.axis == axis) ids.insert(c.sequence_id);
  if (ids.empty())
    throw DomainError(std::string(who) + ": no " + std::string(to_string(axis)) + " conditions");
  if (ids.size() > 1)
    throw DomainError(std::string(who) + ": table holds several sequences; fit one at a time");
  return *ids.begin();
}

inline CurveFit fit_curve(std::string name, const std::vector<CurvePoint>& pts) {
  std::vector<FitPoint> fp;
  for (const auto& p : pts) fp.push_back({p.x, p.y_measured});
  CurveFit cf{std::move(name), fit_inverted_exponential(fp), pts};
  for (auto& p : cf.points) p.y_model = inverted_exponential(p.x, cf.fit.alpha);
  return cf;
}

inline void finish_overall(OverallFit& o) {
  std::vector<double> pred, meas;
  for (const auto& p : o.points) {
    pred.push_back(p.y_model);
    meas.push_back(p.y_measured);
  }
  o.n_points = o.points.size();
  if (o.points.empty()) return;
  o.rmse = rmse(pred, meas);
  if (o.points.size() >= 2 && sample_stddev(pred) > 0.0 && sample_stddev(meas) > 0.0)
    o.pcc = pcc(pred, meas);
}

// Q of the constant condition at `level` in the same group as `c`.
inline const QualityEntry* constant_partner(const QualityTable& t, const TestCondition& c,
                                            double level) {
  TestCondition k = c;
  k.high_level = k.low_level = level;
  auto it = t.find(k);
  return it == t.end() ? nullptr : &it->second;
}

}  // namespace detail

/// Two-step QTV fit for one sequence: alpha_t from constant-rate points, then
/// alpha_tv per t_h from Q(t_h, t_l) / Q(t_h, t_h), pooling all switching
/// intervals.
inline AxisFit fit_qtv(const QualityTable& table, double t_max = kDefaultTMax) {
  const std::string seq = detail::single_sequence(table, Axis::FrameRateVariation, "fit_qtv");
  AxisFit out;
  out.sequence_id = seq;
  out.axis = Axis::FrameRateVariation;
  out.params.t_max = t_max;

  std::vector<CurvePoint> constant;
  for (const auto& [c, e] : table)
    if (c.axis == Axis::FrameRateVariation && c.is_constant())
      constant.push_back({c, c.high_level / t_max, e.normalized_q, 0.0});
  if (constant.empty()) throw DomainError("fit_qtv: no constant frame-rate points for " + seq);
  auto cfit = detail::fit_curve("mnqt_c", constant);
  out.params.alpha_t = cfit.fit.alpha;
  out.curves.push_back(std::move(cfit));

  std::map<double, std::vector<CurvePoint>> ratio;
  for (const auto& [c, e] : table) {
    if (c.axis != Axis::FrameRateVariation) continue;
    const auto* base = detail::constant_partner(table, c, c.high_level);
    if (!base || base->normalized_q <= 0.0) continue;
    ratio[c.high_level].push_back(
        {c, c.low_level / c.high_level, e.normalized_q / base->normalized_q, 0.0});
  }
  for (const auto& [t_h, pts] : ratio) {
    std::set<double> distinct;
    for (const auto& p : pts) distinct.insert(p.condition.low_level);
    if (distinct.size() < 2) continue;
    auto vfit = detail::fit_curve("mnqt_v:" + format_level(t_h), pts);
    out.params.alpha_tv[t_h] = vfit.fit.alpha;
    out.curves.push_back(std::move(vfit));
  }

  for (const auto& [c, e] : table) {
    if (c.axis != Axis::FrameRateVariation) continue;
    if (!c.is_constant() && !out.params.alpha_tv.contains(c.high_level)) continue;
    const double avg = 0.5 * (c.high_level + c.low_level);
    out.overall.points.push_back(
        {c, avg / t_max, e.normalized_q, qtv(c.high_level, c.low_level, out.params)});
  }
  detail::finish_overall(out.overall);
  return out;
}

/// Two-step QQV fit for one sequence: alpha_q from constant-stepsize points,
/// then alpha_qv per (Fz class, q_l) from Q(q_h, q_l) / Q(q_l, q_l), with
/// 1 s and 2 s switching pooled.
inline AxisFit fit_qqv(const QualityTable& table, double q_min = kDefaultQMin) {
  const std::string seq = detail::single_sequence(table, Axis::QuantizationVariation, "fit_qqv");
  AxisFit out;
  out.sequence_id = seq;
  out.axis = Axis::QuantizationVariation;
  out.params.q_min = q_min;

  std::vector<CurvePoint> constant;
  for (const auto& [c, e] : table)
    if (c.axis == Axis::QuantizationVariation && c.is_constant())
      constant.push_back({c, q_min / c.high_level, e.normalized_q, 0.0});
  if (constant.empty()) throw DomainError("fit_qqv: no constant stepsize points for " + seq);
  auto cfit = detail::fit_curve("mnqq_c", constant);
  out.params.alpha_q = cfit.fit.alpha;
  out.curves.push_back(std::move(cfit));

  std::map<QsVariationKey, std::vector<CurvePoint>> ratio;
  for (const auto& [c, e] : table) {
    if (c.axis != Axis::QuantizationVariation) continue;
    const double q_l = c.high_level, q_h = c.low_level;
    const auto* base = detail::constant_partner(table, c, q_l);
    if (!base || base->normalized_q <= 0.0) continue;
    const QsVariationKey key{classify_fz(c.switch_interval_s).fz_class, q_l};
    ratio[key].push_back({c, q_l / q_h, e.normalized_q / base->normalized_q, 0.0});
  }
  for (const auto& [key, pts] : ratio) {
    std::set<double> distinct;
    for (const auto& p : pts) distinct.insert(p.condition.low_level);
    if (distinct.size() < 2) continue;
    auto vfit = detail::fit_curve("mnqq_v:" + to_string(key), pts);
    out.params.alpha_qv[key] = vfit.fit.alpha;
    out.curves.push_back(std::move(vfit));
  }

  for (const auto& [c, e] : table) {
    if (c.axis != Axis::QuantizationVariation) continue;
    const double q_l = c.high_level, q_h = c.low_level;
    if (!c.is_constant() &&
        !out.params.alpha_qv.contains({classify_fz(c.switch_interval_s).fz_class, q_l}))
      continue;
    const double avg = 0.5 * (q_l + q_h);
    out.overall.points.push_back(
        {c, q_min / avg, e.normalized_q, qqv(q_h, q_l, c.switch_interval_s, out.params)});
  }
  detail::finish_overall(out.overall);
  return out;
}

// Merges the FR and QS fragments of one sequence into a single parameter set.
inline ModelParams merge(const ModelParams& fr, const ModelParams& qs) {
  ModelParams p = fr;
  p.alpha_q = qs.alpha_q;
  p.alpha_qv = qs.alpha_qv;
  p.q_min = qs.q_min;
  return p;
}

}  // namespace vqm
