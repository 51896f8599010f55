#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "vqm/error.hpp"
#include "vqm/types.hpp"

namespace vqm {

/// Normalized inverted exponential (1 - e^{-a x}) / (1 - e^{-a}).
///
/// Shared shape of every constant and variation model: f(1) = 1, f(0) = 0,
/// increasing in x, and for fixed x in (0, 1) increasing in a. As a -> 0 it
/// tends to the line f = x; a = 0 itself is outside the domain.
inline double inverted_exponential(double x, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw DomainError("model parameter alpha must be positive and finite, got " +
                      std::to_string(alpha));
  return std::expm1(-alpha * x) / std::expm1(-alpha);
}

// Switching intervals of 1 s and 2 s share one QS-variation parameter; 3 s
// has its own.
enum class FzClass { Fast, Slow };

inline std::string_view to_string(FzClass c) { return c == FzClass::Fast ? "fast" : "slow"; }

struct FzClassification {
  FzClass fz_class;
  bool extrapolated;  // interval outside the tested {1, 2, 3} s
};

inline FzClassification classify_fz(double fz_s) {
  if (!(fz_s > 0.0)) throw DomainError("switch interval must be positive");
  const bool tested = fz_s == 1.0 || fz_s == 2.0 || fz_s == 3.0;
  return {fz_s < 3.0 ? FzClass::Fast : FzClass::Slow, !tested};
}

using QsVariationKey = std::pair<FzClass, double>;  // (Fz class, q_l)

inline std::string format_level(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string to_string(const QsVariationKey& k) {
  return std::string(to_string(k.first)) + ":" + format_level(k.second);
}

struct ModelParams {
  std::optional<double> alpha_t;
  std::map<double, double> alpha_tv;  // keyed by t_h
  std::optional<double> alpha_q;
  std::map<QsVariationKey, double> alpha_qv;
  double t_max = kDefaultTMax;
  double q_min = kDefaultQMin;
};

namespace detail {

template <class Map, class Key, class Fmt>
double lookup_alpha(const Map& m, const Key& key, const char* name, Fmt fmt) {
  if (auto it = m.find(key); it != m.end()) return it->second;
  std::string known;
  for (const auto& [k, v] : m) known += (known.empty() ? "" : ", ") + fmt(k);
  throw DomainError(std::string("no ") + name + " for key " + fmt(key) + " (known: " +
                    (known.empty() ? "none" : known) + ")");
}

inline double require(const std::optional<double>& a, const char* name) {
  if (!a) throw DomainError(std::string(name) + " is not set");
  return *a;
}

}  // namespace detail

inline void validate(const ModelParams& p) {
  auto check = [](double a, const std::string& what) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError(what + " must be positive");
  };
  if (p.alpha_t) check(*p.alpha_t, "alpha_t");
  if (p.alpha_q) check(*p.alpha_q, "alpha_q");
  for (const auto& [k, a] : p.alpha_tv) check(a, "alpha_tv(" + format_level(k) + ")");
  for (const auto& [k, a] : p.alpha_qv) check(a, "alpha_qv(" + to_string(k) + ")");
  check(p.t_max, "t_max");
  check(p.q_min, "q_min");
}

inline double alpha_tv_for(const ModelParams& p, double t_h) {
  return detail::lookup_alpha(p.alpha_tv, t_h, "alpha_tv", format_level);
}

inline double alpha_qv_for(const ModelParams& p, double fz_s, double q_l) {
  const QsVariationKey key{classify_fz(fz_s).fz_class, q_l};
  return detail::lookup_alpha(p.alpha_qv, key, "alpha_qv",
                              [](const QsVariationKey& k) { return to_string(k); });
}

/// Normalized quality at constant frame rate t.
inline double mnqt_c(double t, const ModelParams& p) {
  if (!(t > 0.0) || t > p.t_max)
    throw DomainError("mnqt_c: frame rate " + format_level(t) + " outside (0, " +
                      format_level(p.t_max) + "]");
  if (t == p.t_max) return 1.0;
  return inverted_exponential(t / p.t_max, detail::require(p.alpha_t, "alpha_t"));
}

/// Degradation factor for alternating between t_h and t_l.
inline double mnqt_v(double t_h, double t_l, const ModelParams& p) {
  if (!(t_l > 0.0) || t_l > t_h)
    throw DomainError("mnqt_v: need 0 < t_l <= t_h, got t_h=" + format_level(t_h) +
                      " t_l=" + format_level(t_l));
  if (t_l == t_h) return 1.0;
  return inverted_exponential(t_l / t_h, alpha_tv_for(p, t_h));
}

/// Quality of video alternating between frame rates t_h and t_l. The switching
/// interval does not enter.
inline double qtv(double t_h, double t_l, const ModelParams& p) {
  return mnqt_c(t_h, p) * mnqt_v(t_h, t_l, p);
}

/// Normalized quality at constant quantization stepsize q.
inline double mnqq_c(double q, const ModelParams& p) {
  if (!(q >= p.q_min) || !std::isfinite(q))
    throw DomainError("mnqq_c: stepsize " + format_level(q) + " below q_min " +
                      format_level(p.q_min));
  if (q == p.q_min) return 1.0;
  return inverted_exponential(p.q_min / q, detail::require(p.alpha_q, "alpha_q"));
}

/// Degradation factor for alternating between stepsizes q_h and q_l.
inline double mnqq_v(double q_h, double q_l, double fz_s, const ModelParams& p) {
  if (!(q_l >= p.q_min) || q_l > q_h)
    throw DomainError("mnqq_v: need q_min <= q_l <= q_h, got q_h=" + format_level(q_h) +
                      " q_l=" + format_level(q_l));
  classify_fz(fz_s);
  if (q_l == q_h) return 1.0;
  return inverted_exponential(q_l / q_h, alpha_qv_for(p, fz_s, q_l));
}

/// Quality of video alternating between stepsizes q_h and q_l every fz_s
/// seconds.
inline double qqv(double q_h, double q_l, double fz_s, const ModelParams& p) {
  return mnqq_c(q_l, p) * mnqq_v(q_h, q_l, fz_s, p);
}

/// H.264 quantization stepsize for a QP, rounded to the nearest integer.
inline double qp_to_qs(int qp) {
  if (qp < 0) throw DomainError("qp must be non-negative");
  return std::round(std::exp2((qp - 4) / 6.0));
}

}  // namespace vqm
