#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vqm/fitting.hpp"
#include "vqm/synthetic.hpp"

namespace vqm {
namespace {

std::vector<FitPoint> sample(double alpha, const std::vector<double>& xs) {
  std::vector<FitPoint> pts;
  for (double x : xs) pts.push_back({x, static_cast<double>(oracle::inverted_exponential(x, alpha))});
  return pts;
}

std::vector<double> uniform_grid(int n) {
  std::vector<double> xs;
  for (int k = 1; k <= n; ++k) xs.push_back(static_cast<double>(k) / n);
  return xs;
}

ModelParams truth() {
  ModelParams p;
  p.alpha_t = 6.0;
  p.alpha_tv = {{30.0, 4.0}, {15.0, 3.0}};
  p.alpha_q = 3.0;
  for (double q : {16.0, 25.0, 40.0, 64.0, 102.0}) {
    p.alpha_qv[{FzClass::Fast, q}] = q == 16.0 ? 5.0 : 4.0;
    p.alpha_qv[{FzClass::Slow, q}] = q == 16.0 ? 7.0 : 6.0;
  }
  return p;
}

QualityTable noiseless_table(const std::string& seq, const ModelParams& p, bool fr = true,
                             bool qs = true) {
  QualityTable t;
  auto put = [&](const TestCondition& c) {
    const double q = synthetic::true_quality(c, p);
    t[c] = {80.0 * q, q, 20, 0.0};
  };
  if (fr)
    for (const auto& c : synthetic::frame_rate_conditions(seq)) put(c);
  if (qs)
    for (const auto& c : synthetic::stepsize_conditions(seq)) put(c);
  return t;
}

// --- minimize_bounded ------------------------------------------------------

TEST(Brent, QuadraticMinimum) {
  const auto m = minimize_bounded([](double x) { return (x - 1.7) * (x - 1.7) + 3.0; }, 0.0, 5.0);
  EXPECT_NEAR(m.x, 1.7, 1e-8);
  EXPECT_NEAR(m.fx, 3.0, 1e-15);
  EXPECT_LT(m.iterations, 50);
}

TEST(Brent, NonSmoothAndBoundaryMinima) {
  EXPECT_NEAR(minimize_bounded([](double x) { return std::abs(x - 0.3); }, -1.0, 2.0).x, 0.3, 1e-8);
  EXPECT_NEAR(minimize_bounded([](double x) { return x; }, 2.0, 3.0).x, 2.0, 1e-7);
  EXPECT_NEAR(minimize_bounded([](double x) { return std::cos(x); }, 2.0, 4.0).x, M_PI, 1e-7);
}

// --- fit_inverted_exponential ----------------------------------------------

TEST(Fit, ExactSamplesRecoverAlpha) {
  const auto r = fit_inverted_exponential(sample(6.0, {0.25, 0.5, 0.75, 1.0}));
  EXPECT_NEAR(r.alpha, 6.0, 1e-4);
  EXPECT_LE(r.rmse, 1e-8);
  ASSERT_TRUE(r.pcc.has_value());
  EXPECT_NEAR(*r.pcc, 1.0, 1e-12);
  EXPECT_EQ(r.n_points, 4u);
  EXPECT_FALSE(r.at_bound);
}

TEST(Fit, LinearDataDrivesAlphaToLowerBound) {
  std::vector<FitPoint> pts;
  for (double x : {0.2, 0.4, 0.6, 0.8, 1.0}) pts.push_back({x, x});
  const auto r = fit_inverted_exponential(pts);
  EXPECT_LT(r.alpha, 1e-2);
  EXPECT_LE(r.rmse, 1e-3);
  EXPECT_TRUE(r.at_bound);
}

TEST(Fit, StepDataHitsUpperBound) {
  const auto r = fit_inverted_exponential({{0.01, 1.0}, {0.5, 1.0}, {1.0, 1.0}});
  EXPECT_TRUE(r.at_bound);
  EXPECT_FALSE(r.pcc.has_value());
}

TEST(Fit, Errors) {
  EXPECT_THROW(fit_inverted_exponential({{0.5, 0.9}}), DomainError);
  EXPECT_THROW(fit_inverted_exponential({{0.5, 0.9}, {0.5, 0.8}}), DomainError);
  EXPECT_THROW(fit_inverted_exponential({{0.5, NAN}, {1.0, 1.0}}), DomainError);
  EXPECT_THROW(fit_inverted_exponential({{INFINITY, 0.5}, {1.0, 1.0}}), DomainError);
}

TEST(Fit, ResidualsAreMeasuredMinusModel) {
  const std::vector<FitPoint> pts = {{0.25, 0.6}, {0.5, 0.8}, {1.0, 1.0}};
  const auto r = fit_inverted_exponential(pts);
  ASSERT_EQ(r.residuals.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_DOUBLE_EQ(r.residuals[i], pts[i].y - inverted_exponential(pts[i].x, r.alpha));
}

TEST(FitProperties, NoiselessRoundTrip) {
  for (double a : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0})
    for (int n : {4, 9, 32}) {
      const auto r = fit_inverted_exponential(sample(a, uniform_grid(n)));
      EXPECT_LT(std::abs(r.alpha / a - 1.0), 1e-3) << "alpha=" << a << " n=" << n;
    }
}

TEST(FitProperties, NoiseRobustnessNinetyFifthPercentile) {
  // sigma = 0.01 on y; 128 evenly spaced samples on (0, 1].
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto xs = uniform_grid(128);
  for (double a : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
    std::vector<double> err;
    for (int trial = 0; trial < 100; ++trial) {
      auto pts = sample(a, xs);
      for (auto& p : pts) p.y += noise(rng);
      err.push_back(std::abs(fit_inverted_exponential(pts).alpha / a - 1.0));
    }
    std::sort(err.begin(), err.end());
    EXPECT_LT(err[94], 0.05) << "alpha=" << a;
  }
}

TEST(FitProperties, LocalMinimumCertificate) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::uniform_real_distribution<double> la(std::log(0.3), std::log(60.0));
  for (int trial = 0; trial < 200; ++trial) {
    auto pts = sample(std::exp(la(rng)), {0.2, 0.35, 0.5, 0.8, 1.0});
    for (auto& p : pts) p.y += noise(rng);
    const auto r = fit_inverted_exponential(pts);
    const double s = sse(pts, r.alpha);
    if (r.alpha - 1e-3 >= kAlphaLower) {
      EXPECT_LE(s, sse(pts, r.alpha - 1e-3));
    }
    if (r.alpha + 1e-3 <= kAlphaUpper) {
      EXPECT_LE(s, sse(pts, r.alpha + 1e-3));
    }
  }
}

// --- pcc / rmse ------------------------------------------------------------

TEST(Goodness, Examples) {
  const std::vector<double> a = {1, 2, 3}, b = {1.1, 1.9, 3.2};
  EXPECT_DOUBLE_EQ(pcc(a, a), 1.0);
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_DOUBLE_EQ(pcc(a, std::vector<double>{-1, -2, -3}), -1.0);
  EXPECT_NEAR(pcc(a, b), 0.990683605362841, 1e-12);
  EXPECT_NEAR(rmse(a, b), 0.141421356237310, 1e-12);
  EXPECT_THROW(pcc(std::vector<double>{2, 2, 2}, b), DomainError);
  EXPECT_THROW(pcc(a, std::vector<double>{1, 2}), DomainError);
}

// --- fit_qtv / fit_qqv -----------------------------------------------------

TEST(FitQtv, SyntheticRoundTrip) {
  const auto p = truth();
  const auto table = noiseless_table("akiyo", p, true, false);
  const auto f = fit_qtv(table);
  EXPECT_EQ(f.sequence_id, "akiyo");
  EXPECT_NEAR(*f.params.alpha_t / 6.0, 1.0, 0.01);
  EXPECT_NEAR(f.params.alpha_tv.at(30.0) / 4.0, 1.0, 0.01);
  EXPECT_NEAR(f.params.alpha_tv.at(15.0) / 3.0, 1.0, 0.01);
  EXPECT_EQ(f.params.alpha_tv.size(), 2u);
  ASSERT_TRUE(f.overall.pcc.has_value());
  EXPECT_GT(*f.overall.pcc, 0.9999);
  EXPECT_LT(f.overall.rmse, 1e-6);
  EXPECT_EQ(f.overall.n_points, 18u);
  ASSERT_EQ(f.curves.size(), 3u);
  EXPECT_EQ(f.curves[0].curve, "mnqt_c");
  EXPECT_EQ(f.curves[1].curve, "mnqt_v:15");
  EXPECT_EQ(f.curves[2].curve, "mnqt_v:30");
}

TEST(FitQqv, SyntheticRoundTrip) {
  const auto p = truth();
  const auto f = fit_qqv(noiseless_table("foreman", p, false, true));
  EXPECT_NEAR(*f.params.alpha_q / 3.0, 1.0, 0.01);
  EXPECT_NEAR(f.params.alpha_qv.at({FzClass::Fast, 16.0}) / 5.0, 1.0, 0.01);
  EXPECT_NEAR(f.params.alpha_qv.at({FzClass::Slow, 16.0}) / 7.0, 1.0, 0.01);
  EXPECT_NEAR(f.params.alpha_qv.at({FzClass::Fast, 40.0}) / 4.0, 1.0, 0.01);
  EXPECT_NEAR(f.params.alpha_qv.at({FzClass::Slow, 40.0}) / 6.0, 1.0, 0.01);
  // q_l = 25 and 64 have no constant partner on the test grid.
  EXPECT_EQ(f.params.alpha_qv.size(), 4u);
  EXPECT_LT(f.overall.rmse, 1e-6);
}

TEST(FitQtv, ConstantOnlyTable) {
  QualityTable t;
  for (double r : {7.5, 15.0, 30.0}) {
    const TestCondition c{"ice", Axis::FrameRateVariation, r, r, 1.0, 16.0};
    const double q = inverted_exponential(r / 30.0, 5.0);
    t[c] = {80 * q, q, 10, 1.0};
  }
  const auto f = fit_qtv(t);
  EXPECT_NEAR(*f.params.alpha_t, 5.0, 1e-4);
  EXPECT_TRUE(f.params.alpha_tv.empty());
  EXPECT_EQ(f.curves.size(), 1u);
}

TEST(FitQqv, ConstantOnlyTable) {
  QualityTable t;
  for (double q : {16.0, 40.0, 102.0}) {
    const TestCondition c{"ice", Axis::QuantizationVariation, q, q, 3.0, 30.0};
    const double v = inverted_exponential(16.0 / q, 2.0);
    t[c] = {80 * v, v, 10, 1.0};
  }
  const auto f = fit_qqv(t);
  EXPECT_NEAR(*f.params.alpha_q, 2.0, 1e-4);
  EXPECT_TRUE(f.params.alpha_qv.empty());
}

TEST(FitQtv, Errors) {
  EXPECT_THROW(fit_qtv({}), DomainError);
  auto two = noiseless_table("akiyo", truth(), true, false);
  for (const auto& [c, e] : noiseless_table("foreman", truth(), true, false)) two[c] = e;
  EXPECT_THROW(fit_qtv(two), DomainError);
  EXPECT_NO_THROW(fit_qtv(select_sequence(two, "foreman")));
  QualityTable varying_only;
  varying_only[{"ice", Axis::FrameRateVariation, 30, 15, 1, 16}] = {50, 0.6, 5, 1};
  EXPECT_THROW(fit_qtv(varying_only), DomainError);
  EXPECT_THROW(fit_qqv(noiseless_table("akiyo", truth(), true, false)), DomainError);
}

TEST(FitProperties, InputTableUnchanged) {
  const auto original = noiseless_table("akiyo", truth());
  auto copy = original;
  (void)fit_qtv(copy);
  (void)fit_qqv(copy);
  ASSERT_EQ(copy.size(), original.size());
  for (const auto& [c, e] : original) {
    const auto& d = copy.at(c);
    EXPECT_EQ(d.mos, e.mos);
    EXPECT_EQ(d.normalized_q, e.normalized_q);
    EXPECT_EQ(d.n_ratings, e.n_ratings);
  }
}

TEST(FitProperties, MergeCombinesAxes) {
  const auto t = noiseless_table("akiyo", truth());
  const auto p = merge(fit_qtv(t).params, fit_qqv(t).params);
  EXPECT_TRUE(p.alpha_t && p.alpha_q);
  EXPECT_EQ(p.alpha_tv.size(), 2u);
  EXPECT_EQ(p.alpha_qv.size(), 4u);
  EXPECT_NEAR(qtv(30, 7.5, p), qtv(30, 7.5, truth()), 1e-5);
  EXPECT_NEAR(qqv(102, 16, 3, p), qqv(102, 16, 3, truth()), 1e-5);
}

}  // namespace
}  // namespace vqm
