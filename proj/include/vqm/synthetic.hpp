#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vqm/models.hpp"
#include "vqm/types.hpp"

// Seeded generator of subjective-test panels drawn from known model
// parameters, for round-trip tests of the screening and fitting chain.

namespace vqm::synthetic {

/// Frame-rate test grid: (t_h, t_l) in {(30,30), (30,15), (30,7.5), (15,15),
/// (15,7.5), (7.5,7.5)} at QS 16, for switching intervals 1, 2 and 3 s.
inline std::vector<TestCondition> frame_rate_conditions(const std::string& seq) {
  const std::vector<std::pair<double, double>> pairs = {
      {30, 30}, {30, 15}, {30, 7.5}, {15, 15}, {15, 7.5}, {7.5, 7.5}};
  std::vector<TestCondition> out;
  for (double fz : {1.0, 2.0, 3.0})
    for (const auto& [h, l] : pairs)
      out.push_back({seq, Axis::FrameRateVariation, h, l, fz, kDefaultQMin});
  return out;
}

/// Stepsize test grid at 30 Hz as (q_l, q_h): base QS 16 against every level
/// and base QS 40 against 25..102 for 1, 2 and 3 s; base QS 102 against 25
/// and 64 for 3 s only.
inline std::vector<TestCondition> stepsize_conditions(const std::string& seq) {
  std::vector<TestCondition> out;
  auto add = [&](double a, double b, double fz) {
    out.push_back({seq, Axis::QuantizationVariation, std::min(a, b), std::max(a, b), fz,
                   kDefaultTMax});
  };
  for (double fz : {1.0, 2.0, 3.0}) {
    for (double v : {16.0, 25.0, 40.0, 64.0, 102.0}) add(16.0, v, fz);
    for (double v : {25.0, 40.0, 64.0, 102.0}) add(40.0, v, fz);
  }
  for (double v : {25.0, 64.0, 102.0}) add(102.0, v, 3.0);
  return out;
}

inline double true_quality(const TestCondition& c, const ModelParams& p) {
  if (c.axis == Axis::FrameRateVariation) return qtv(c.high_level, c.low_level, p);
  return qqv(c.low_level, c.high_level, c.switch_interval_s, p);
}

struct PanelSpec {
  std::map<std::string, ModelParams> truth;  // per sequence
  int n_viewers = 20;
  double scale = 80.0;       // raw score of the reference condition
  double noise_sd = 5.0;     // per-rating noise, raw points
  double bias_sd = 3.0;      // per-viewer offset
  double gain_spread = 0.1;  // per-viewer gain drawn from 1 +/- spread
  std::uint64_t seed = 1;
  bool frame_rate = true;
  bool stepsize = true;
  // Planted misbehaving viewers, added on top of n_viewers honest ones.
  // "outlier": noise-free ratings, with every outlier_every-th condition
  // shifted by +/- outlier_shift * noise_sd (sign alternating between shifts).
  bool plant_outlier = false;
  double outlier_shift = 3.0;
  int outlier_every = 4;
  bool plant_violator = false;    // "violator": reverses quality order on one sequence
  std::string violator_sequence;  // defaults to the first sequence
};

inline std::vector<TestCondition> conditions(const PanelSpec& spec) {
  std::vector<TestCondition> out;
  for (const auto& [seq, p] : spec.truth) {
    if (spec.frame_rate)
      for (auto& c : frame_rate_conditions(seq)) out.push_back(c);
    if (spec.stepsize)
      for (auto& c : stepsize_conditions(seq)) out.push_back(c);
  }
  return out;
}

inline std::vector<RatingRecord> generate_panel(const PanelSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> spread(-1.0, 1.0);
  const auto conds = conditions(spec);
  const std::string violator_seq =
      spec.violator_sequence.empty() && !spec.truth.empty() ? spec.truth.begin()->first
                                                            : spec.violator_sequence;

  std::vector<std::string> viewers;
  for (int i = 0; i < spec.n_viewers; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%02d", i + 1);
    viewers.emplace_back(buf);
  }
  if (spec.plant_outlier) viewers.emplace_back("outlier");
  if (spec.plant_violator) viewers.emplace_back("violator");

  std::vector<RatingRecord> out;
  for (const auto& v : viewers) {
    const double bias = spec.bias_sd * unit(rng);
    const double gain = 1.0 + spec.gain_spread * spread(rng);
    const bool outlier = v == "outlier";
    double shift = spec.outlier_shift * spec.noise_sd;
    for (std::size_t k = 0; k < conds.size(); ++k) {
      const auto& c = conds[k];
      double q = true_quality(c, spec.truth.at(c.sequence_id));
      // Reversed ordering: best conditions rated worst.
      if (v == "violator" && c.sequence_id == violator_seq) q = 1.3 - q;
      double s = bias + gain * spec.scale * q;
      if (!outlier) {
        s += spec.noise_sd * unit(rng);
      } else if (k % static_cast<std::size_t>(spec.outlier_every) == 0) {
        s += shift;
        shift = -shift;
      }
      out.push_back({v, c, std::clamp(s, 0.0, 100.0)});
    }
  }
  return out;
}

}  // namespace vqm::synthetic
