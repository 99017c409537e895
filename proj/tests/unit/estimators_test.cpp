#include "hypbridge/estimators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hypbridge/errors.hpp"

namespace est = hypbridge::estimators;
namespace sde = hypbridge::sde;

TEST(Summarize, MeanAndStandardError) {
  const auto e = est::summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_NEAR(e.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(e.hits, 4u);
  EXPECT_THROW(est::summarize({}), hypbridge::DomainError);
}

TEST(Proportion, RuleOfThree) {
  const auto none = est::proportion(std::vector<double>(100, 0.0));
  EXPECT_TRUE(none.zero_hits);
  EXPECT_DOUBLE_EQ(none.se, 0.03);
  const auto all = est::proportion(std::vector<double>(100, 1.0));
  EXPECT_TRUE(all.all_hits);
  EXPECT_DOUBLE_EQ(all.mean, 1.0);
  EXPECT_DOUBLE_EQ(all.se, 0.03);
  const auto some = est::proportion({0, 1, 1, 0});
  EXPECT_FALSE(some.zero_hits || some.all_hits);
  EXPECT_THROW(est::proportion({0.5}), hypbridge::DomainError);
}

TEST(RateFit, RecoversExactLine) {
  std::vector<est::RatePoint> pts;
  for (double s : {1.0, 2.0, 4.0, 7.0}) pts.push_back({s, 0.3 - 0.24 * s, 1.0 + s});
  const auto f = est::rate_fit_log(pts);
  EXPECT_NEAR(f.slope, -0.24, 1e-14);
  EXPECT_NEAR(f.intercept, 0.3, 1e-14);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(RateFit, ScaleEquivariance) {
  std::vector<std::pair<double, est::EstimateCI>> pts, scaled;
  const double ms[] = {0.6, 0.25, 0.13, 0.04};
  const double ss[] = {0.01, 0.006, 0.004, 0.002};
  for (int i = 0; i < 4; ++i) {
    est::EstimateCI e;
    e.mean = ms[i];
    e.se = ss[i];
    pts.emplace_back(2.0 * (i + 1), e);
    e.mean *= 1e-3;
    e.se *= 1e-3;
    scaled.emplace_back(2.0 * (i + 1), e);
  }
  const auto a = est::rate_fit(pts);
  const auto b = est::rate_fit(scaled);
  EXPECT_NEAR(a.slope, b.slope, 1e-12);
  EXPECT_NEAR(b.intercept - a.intercept, std::log(1e-3), 1e-12);
}

TEST(RateFit, Preconditions) {
  EXPECT_THROW(est::rate_fit_log({{1, 0, 1}, {2, 0, 1}}), hypbridge::DomainError);
  EXPECT_THROW(est::rate_fit_log({{1, 0, 1}, {1, 1, 1}, {1, 2, 1}}), hypbridge::DomainError);
  est::EstimateCI zero;
  EXPECT_THROW(est::rate_fit({{1, zero}, {2, zero}, {3, zero}}), hypbridge::DomainError);
}

TEST(KS, IdenticalAndShiftedSamples) {
  std::vector<double> a, b;
  for (int i = 0; i < 1000; ++i) a.push_back(i), b.push_back(i + 0.5);
  EXPECT_NEAR(est::ks_two_sample(a, a).statistic, 0.0, 1e-15);
  EXPECT_NEAR(est::ks_two_sample(a, b).statistic, 0.001, 1e-12);
  for (auto& x : b) x += 300;
  EXPECT_NEAR(est::ks_two_sample(a, b).statistic, 0.301, 1e-12);
  EXPECT_FALSE(est::ks_two_sample(a, b).passes());
}

TEST(TailFit, GaussianTail) {
  // Rayleigh quantiles: P[X >= u] = exp(-u^2 / 2) exactly
  std::vector<double> xs;
  const int n = 20000;
  for (int i = 1; i <= n; ++i) xs.push_back(std::sqrt(-2.0 * std::log((i - 0.5) / n)));
  const auto f = est::subgaussian_tail_fit(xs);
  EXPECT_NEAR(f.c_hat, 0.5, 1e-3);
  EXPECT_GT(f.r2, 0.999);
}

TEST(HitProb, IndependentOfThreadCount) {
  const sde::CirSpec spec{3.0, 0.0, 1.0, 1.0, 0.0};
  for (auto m : {est::Method::naive, est::Method::girsanov}) {
    est::HitOptions one{sde::CrossingRule::bridge, sde::CirScheme::root_reflected, 1};
    est::HitOptions many = one;
    many.threads = 4;
    const auto a = est::hit_prob(spec, 1.0, 1.0, 2000, 1e-3, 3, m, one);
    const auto b = est::hit_prob(spec, 1.0, 1.0, 2000, 1e-3, 3, m, many);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.se, b.se);
  }
}

TEST(Laplace, SharedPathsMatchSingleLambda) {
  const auto multi = est::mc_laplace_multi(5.0, 1.0, {0.5, 2.0}, 0.0625, 1.0, 500, 1e-3, 4, 30.0);
  const auto single = est::mc_laplace(5.0, 1.0, 2.0, 0.0625, 1.0, 500, 1e-3, 4, 30.0);
  EXPECT_EQ(multi[1].mean, single.mean);
  EXPECT_GT(multi[0].mean, multi[1].mean);
  EXPECT_DOUBLE_EQ(single.bias_bound, std::exp(-60.0));
  EXPECT_THROW(est::mc_laplace(5.0, 0.2, 1.0, 0.0625, 1.0, 10, 1e-3, 4, 30.0), hypbridge::DomainError);
}
