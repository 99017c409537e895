#include "hypbridge/sde.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "hypbridge/errors.hpp"
#include "hypbridge/estimators.hpp"
#include "hypbridge/kernels.hpp"
#include "hypbridge/parallel.hpp"

namespace sde = hypbridge::sde;
namespace est = hypbridge::estimators;
namespace hg = hypbridge::hypgeo;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double stderr_of(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1) / v.size());
}

// One-sample KS statistic against a CDF.
template <typename Cdf>
double ks_one_sample(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_crit_1pct(double n) { return 1.628 / std::sqrt(n); }

std::vector<double> terminal_values(const sde::CirSpec& spec, double T, double h, std::size_t n, std::uint64_t seed,
                                    sde::CirScheme scheme = sde::CirScheme::full_truncation) {
  std::vector<double> out(n);
  hypbridge::parallel::parallel_for(
      n, [&](std::size_t i) { out[i] = sde::simulate_cir(spec, T, h, seed, i, scheme).values.back(); });
  return out;
}

}  // namespace

TEST(Grid, UniformWithShortLastStep) {
  const auto g = sde::uniform_grid(1.0, 0.3);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_NEAR(g[3], 0.9, 1e-15);
  EXPECT_THROW(sde::uniform_grid(1.0, 0.0), hypbridge::DomainError);
}

TEST(Cir, DeterministicPerSeedAndPath) {
  const sde::CirSpec spec{3.0, 0.1, 1.0, 1.0, 0.2};
  for (auto scheme : {sde::CirScheme::full_truncation, sde::CirScheme::root_reflected}) {
    const auto a = sde::simulate_cir(spec, 1.0, 1e-3, 5, 17, scheme);
    const auto b = sde::simulate_cir(spec, 1.0, 1e-3, 5, 17, scheme);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, sde::simulate_cir(spec, 1.0, 1e-3, 5, 18, scheme).values);
  }
}

TEST(Cir, ValuesNonnegative) {
  for (auto scheme : {sde::CirScheme::full_truncation, sde::CirScheme::root_reflected}) {
    for (std::uint64_t p = 0; p < 200; ++p) {
      const auto path = sde::simulate_cir({2.0, 0.0, 1.0, 0.3, 0.0}, 1.0, 1e-2, 3, p, scheme);
      ASSERT_GE(*std::min_element(path.values.begin(), path.values.end()), 0.0);
    }
  }
}

TEST(Cir, SquaredBesselMean) {
  const double y0 = 0.5, k = 3.0, T = 1.0;
  const auto v = terminal_values({0.0, 0.0, 1.0, k, y0}, T, 1e-3, 10000, 21);
  EXPECT_LT(std::abs(mean(v) - (y0 + k * T)), 3.0 * stderr_of(v));
}

TEST(Cir, SquaredBesselTwoIsExponential) {
  const auto v = terminal_values({0.0, 0.0, 1.0, 2.0, 0.0}, 1.0, 1e-3, 10000, 22);
  const double d = ks_one_sample(v, [](double x) { return -std::expm1(-x / 2.0); });
  EXPECT_LT(d, ks_crit_1pct(10000));
}

TEST(Cir, StrongDriftPullsToZero) {
  auto v = terminal_values({50.0, 0.0, 1.0, 1.0, 1.0}, 1.0, 1e-3, 1000, 23);
  std::nth_element(v.begin(), v.begin() + 500, v.end());
  EXPECT_LT(v[500], 0.05);
}

TEST(FirstPassage, StartAtOrAboveBarrier) {
  const auto r = sde::first_passage({1.0, 0.0, 1.0, 1.0, 2.0}, 1.5, 1.0, 1e-3, 1);
  EXPECT_TRUE(r.hit);
  EXPECT_EQ(*r.time, 0.0);
  EXPECT_EQ(r.weight, 1.0);
}

TEST(FirstPassage, RareEventGivesNoNaiveHits) {
  const auto e = est::hit_prob({20.0, 0.0, 1.0, 1.0, 0.0}, 1.0, 1.0, 100000, 1e-3, 31, est::Method::naive);
  EXPECT_EQ(e.hits, 0u);
  EXPECT_TRUE(e.zero_hits);
  EXPECT_DOUBLE_EQ(e.se, 3e-5);
}

TEST(FirstPassage, StepRefinementBesselTwo) {
  const sde::CirSpec spec{0.0, 0.0, 1.0, 2.0, 0.0};
  est::HitOptions opts{sde::CrossingRule::bridge, sde::CirScheme::root_reflected, 0};
  const auto coarse = est::hit_prob(spec, 4.0, 1.0, 20000, 2e-3, 32, est::Method::naive, opts);
  const auto fine = est::hit_prob(spec, 4.0, 1.0, 20000, 2e-3 / 16, 33, est::Method::naive, opts);
  EXPECT_LT(std::abs(coarse.mean - fine.mean), 3.0 * std::hypot(coarse.se, fine.se));
  // exit probability of planar Brownian motion from the disk of radius 2 by
  // t = 1, from the Bessel-zero series 1 - sum 2 exp(-j^2/8) / (j J_1(j))
  EXPECT_NEAR(fine.mean, 0.2460278, 4.0 * fine.se);
}

TEST(Girsanov, RejectsSubcriticalDimension) {
  EXPECT_THROW(sde::first_passage_girsanov({2.0, 0.0, 1.0, 0.5, 0.0}, 1.0, 1.0, 1e-3, 1), hypbridge::DomainError);
  EXPECT_THROW(est::hit_prob({2.0, 0.0, 1.0, 0.5, 0.0}, 1.0, 1.0, 10, 1e-3, 1, est::Method::girsanov),
               hypbridge::DomainError);
}

TEST(Girsanov, DegenerateBarrierWeight) {
  EXPECT_NEAR(std::exp(sde::girsanov_log_prefactor({0.0, 0.0, 1.0, 1.0, 0.0}, 1e-12)), 1.0, 1e-6);
}

TEST(Girsanov, ExponentDominatesHittingTime) {
  for (double nu : {1.0, 4.0}) {
    for (std::uint64_t p = 0; p < 500; ++p) {
      const auto r = sde::first_passage_girsanov({nu, 0.0, 1.0, 1.0, 0.0}, 1.0, 1.0, 1e-3, 41, p);
      if (!r.hit) continue;
      // the integrand is at least 1 when k >= 1
      EXPECT_GE(r.exponent, *r.time - 1e-12);
    }
  }
}

TEST(Girsanov, AgreesWithNaiveAtModerateNu) {
  const sde::CirSpec spec{4.0, 0.0, 1.0, 1.0, 0.0};
  est::HitOptions opts{sde::CrossingRule::bridge, sde::CirScheme::root_reflected, 0};
  const auto naive = est::hit_prob(spec, 1.0, 1.0, 40000, 1e-3, 42, est::Method::naive, opts);
  const auto is = est::hit_prob(spec, 1.0, 1.0, 40000, 1e-3, 43, est::Method::girsanov, opts);
  EXPECT_LT(std::abs(naive.mean - is.mean), 3.0 * std::hypot(naive.se, is.se));
}

TEST(Mixture, AgreesWithNaiveForPerturbedDrift) {
  est::HitOptions opts{sde::CrossingRule::bridge, sde::CirScheme::root_reflected, 0};
  for (double alpha : {-0.2, 0.2}) {
    const sde::CirSpec spec{3.0, alpha, 1.0, 1.0, 0.0};
    const auto naive = est::hit_prob(spec, 1.0, 1.0, 20000, 1e-3, 44, est::Method::naive, opts);
    const auto mix = est::hit_prob(spec, 1.0, 1.0, 20000, 1e-3, 45, est::Method::girsanov_mixture, opts);
    EXPECT_LT(std::abs(naive.mean - mix.mean), 3.0 * std::hypot(naive.se, mix.se)) << alpha;
  }
}

TEST(Mixture, RequiresRootScheme) {
  est::HitOptions opts{sde::CrossingRule::grid, sde::CirScheme::full_truncation, 0};
  EXPECT_THROW(est::hit_prob({3.0, 0.0, 1.0, 1.0, 0.0}, 1.0, 1.0, 10, 1e-3, 1, est::Method::girsanov_mixture, opts),
               hypbridge::DomainError);
}

TEST(Jacobi, HitsBarrierWithEntranceBoundary) {
  const auto r = sde::jacobi_first_passage(5.0, 1.0, 0.0625, 1.0, 30.0, 1e-3, 3, 0);
  ASSERT_TRUE(r.hit);
  EXPECT_GT(*r.time, 0.0);
}

TEST(TimeChange, PsiProperties) {
  const sde::TimeChangeSpec tc{2.0, 1.0, 3.0};
  EXPECT_NEAR(tc.c_a(), std::tanh(1.0), 1e-15);
  EXPECT_NEAR(tc.psi(1e6), tc.psi_limit(), 1e-12);
  EXPECT_NEAR(tc.psi_limit(), 1.0 / (2.0 * 4.0 * std::tanh(1.0)), 1e-15);
  double prev = -1.0;
  for (double t = 0.0; t < 3.0; t += 0.1) {
    EXPECT_GT(tc.psi(t), prev);
    prev = tc.psi(t);
  }
  const sde::TimeChangeSpec flat{2.0, 1.0, -1.0};
  EXPECT_EQ(flat.psi(0.7), 0.7);
}

TEST(TimeChange, MatchesDirectEuler) {
  const std::size_t n = 10000;
  std::vector<double> a(n), b(n);
  hypbridge::parallel::parallel_for(n, [&](std::size_t i) {
    a[i] = sde::cir_via_timechange(2.0, 1.0, 3.0, 1.0, 1e-3, 51, i).values.back();
    b[i] = sde::simulate_linear_cir(2.0, 1.0, 3.0, 1.0, 1e-3, 52, i).values.back();
  });
  const auto ks = est::ks_two_sample(a, b);
  EXPECT_TRUE(ks.passes()) << ks.statistic << " vs " << ks.critical_1pct;
}

TEST(TimeChange, FlatLimitIsSquaredBessel) {
  const std::size_t n = 10000;
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = sde::cir_via_timechange(2.0, 1.0, -1.0, 1.0, 1e-2, 53, i).values.back();
  EXPECT_LT(ks_one_sample(a, [](double x) { return -std::expm1(-x / 2.0); }), ks_crit_1pct(n));
}

TEST(HypBM, ShortTimeSecondMoment) {
  const double h = 1e-4;
  double sum = 0.0;
  const int n = 100000;
  const sde::Point z0{0.3, 0.2, 1.5};
  for (int i = 0; i < n; ++i) {
    const auto p = sde::simulate_hyp_bm(3, 1.0, z0, h, h, 61, i);
    const double r = hg::distance(z0, p.points.back());
    sum += r * r;
  }
  EXPECT_NEAR(sum / n / h, 3.0, 0.3);
}

TEST(HypBM, RadialMarginalMatchesHeatKernel) {
  const double T = 0.5;
  const std::size_t n = 10000;
  const sde::Point z0{0.0, 1.0};
  std::vector<double> rho(n);
  hypbridge::parallel::parallel_for(n, [&](std::size_t i) {
    rho[i] = hg::distance(z0, sde::simulate_hyp_bm(2, 1.0, z0, T, 1e-3, 62, i).points.back());
  });
  auto dens = [&](double r) { return hypbridge::kernels::h_even(2, T, r) * std::sinh(r); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double total = GK::integrate(dens, 0.0, 12.0, 10, 1e-12);
  const double d = ks_one_sample(rho, [&](double r) { return GK::integrate(dens, 0.0, r, 10, 1e-12) / total; });
  EXPECT_LT(d, ks_crit_1pct(n));
}

TEST(HypBM, EquivariantUnderTranslationAndDilation) {
  const sde::Point z0{0.1, -0.4, 0.8};
  const auto iso = hg::HalfSpaceIsometry<double>::normalizing(sde::Point{1.0, 2.0, 3.0}, hg::unit_vector<double>(3, 2));
  const auto a = sde::simulate_hyp_bm(3, 1.0, z0, 0.2, 1e-3, 63, 4);
  const auto b = sde::simulate_hyp_bm(3, 1.0, iso.apply(z0), 0.2, 1e-3, 63, 4);
  for (std::size_t i = 0; i < a.points.size(); ++i)
    ASSERT_LT((iso.apply(a.points[i]).coords() - b.points[i].coords()).norm(), 1e-10 * b.points[i].height());
}

namespace {

sde::BridgeSpec axis_bridge(double s, int d = 2) {
  sde::BridgeSpec spec;
  spec.x = sde::Point::on_axis(d);
  spec.v = hg::unit_vector<double>(d, d - 1);
  spec.s = s;
  return spec;
}

}  // namespace

TEST(Bridge, RejectsUnsupportedDimension) {
  auto spec = axis_bridge(1.0, 2);
  spec.x = sde::Point::on_axis(5);
  spec.v = hg::unit_vector<double>(5, 4);
  EXPECT_THROW(sde::BridgeSimulator{spec}, hypbridge::DomainError);
}

TEST(Bridge, DeterministicAndEndsAtTarget) {
  for (int d : {2, 3}) {
    const sde::BridgeSimulator sim(axis_bridge(3.0, d));
    const auto a = sim.path(71, 2);
    const auto b = sim.path(71, 2);
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) ASSERT_EQ(a.points[i].coords(), b.points[i].coords());
    EXPECT_NEAR(hg::distance(a.points.back(), sim.spec().y()), 0.0, 1e-9);
    EXPECT_EQ(a.times.back(), 1.0);
  }
}

// For a loop bridge the remaining displacement at time 1 - eps is close to a
// planar Gaussian with variance eps per coordinate, so P[rho < 3 sqrt(eps)]
// is about 1 - exp(-4.5).
TEST(Bridge, LoopBridgeReturns) {
  const sde::BridgeSimulator sim(axis_bridge(0.0));
  const double eps = sim.spec().end_cut;
  const int n = 1000;
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += sim.stats(72, i).end_dist < 3.0 * std::sqrt(eps);
  const double p = 1.0 - std::exp(-4.5);
  EXPECT_GT(static_cast<double>(inside) / n, p - 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Bridge, PinnedNearEndpoint) {
  const sde::BridgeSimulator sim(axis_bridge(4.0));
  const double eps = sim.spec().end_cut;
  const int n = 1000;
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += sim.stats(73, i).end_dist < 5.0 * std::sqrt(eps);
  EXPECT_GE(inside, 990);
}

TEST(Bridge, SegmentSupDominatesLineSup) {
  const sde::BridgeSimulator sim(axis_bridge(4.0));
  for (int i = 0; i < 300; ++i) {
    const auto st = sim.stats(74, i);
    ASSERT_GE(st.sup_f_segment, st.sup_f_line - 1e-12);
    ASSERT_GE(st.sup_dist_gamma * st.sup_dist_gamma, st.sup_f_segment - 1e-9);
  }
}

TEST(Bridge, SupMatchesSeparateDistanceEvaluation) {
  const auto spec = axis_bridge(2.0);
  const sde::BridgeSimulator sim(spec);
  const auto path = sim.path(75, 0);
  const auto line = hg::GeodesicSpec<double>::line_through(spec.x, spec.y());
  double sup = 0.0;
  for (const auto& z : path.points) sup = std::max(sup, std::pow(hg::dist_to_geodesic(z, line).g, 2));
  EXPECT_NEAR(sim.stats(75, 0).sup_f_line, sup, 1e-12);
  EXPECT_NEAR(sde::bridge_sup_f(spec, line, 75, 0), sup, 1e-12);
}

TEST(Bridge, LoopBridgeStaysClose) {
  const sde::BridgeSimulator sim(axis_bridge(0.0));
  int big = 0;
  for (int i = 0; i < 500; ++i) big += sim.stats(76, i).sup_dist_gamma >= 3.0;
  EXPECT_EQ(big, 0);
}

TEST(Bridge, TimeReversalSymmetry) {
  const double s = 2.0;
  auto fwd = axis_bridge(s);
  auto bwd = axis_bridge(s);
  bwd.x = fwd.y();
  bwd.v = -hg::unit_vector<double>(2, 1);
  const sde::BridgeSimulator sf(fwd), sb(bwd);
  const std::size_t n = 10000;
  std::vector<double> a(n), b(n);
  hypbridge::parallel::parallel_for(n, [&](std::size_t i) {
    a[i] = sf.stats(77, i).mid_dist;
    b[i] = sb.stats(78, i).mid_dist;
  });
  const auto ks = est::ks_two_sample(a, b);
  EXPECT_TRUE(ks.passes()) << ks.statistic << " vs " << ks.critical_1pct;
}

// Moderate-s sanity check: P[sup Z >= a] within a factor e^{0.5} of e^{-s K}.
TEST(Bridge, ModerateSeparationAgainstRate) {
  const double s = 6.0, a = 0.25;
  const sde::BridgeSimulator sim(axis_bridge(s));
  const std::size_t n = 4000;
  std::vector<double> hit(n);
  hypbridge::parallel::parallel_for(n, [&](std::size_t i) { hit[i] = sim.stats(79, i).sup_f_line >= a; });
  const double p = mean(hit);
  const double target = std::exp(-s * hypbridge::kernels::kcal(a, 1.0));
  EXPECT_LE(std::abs(std::log(p / target)), 0.5) << "P = " << p << ", exp(-sK) = " << target;
}

TEST(Bridge, SandwichHoldsOnConcentrationEvent) {
  const sde::BridgeSimulator sim(axis_bridge(8.0));
  std::size_t steps = 0, bad = 0;
  for (int i = 0; i < 200; ++i) {
    const auto st = sim.stats(80, i, {0.1, 0.5});
    if (!st.in_E) continue;
    steps += st.sandwich_steps;
    bad += st.sandwich_violations;
  }
  ASSERT_GT(steps, 0u);
  EXPECT_LE(static_cast<double>(bad), 0.01 * static_cast<double>(steps));
}

TEST(Bidisk, LoopIsSmall) {
  const sde::BidiskBridge bb(0.0, 5e-4);
  for (int i = 0; i < 100; ++i) EXPECT_LT(bb.stats(81, i).sup_dist, 4.0);
}

TEST(Bidisk, PathStatsConsistentAndFactorsIndependent) {
  const sde::BidiskBridge bb(2.0, 5e-4);
  const auto path = bb.path(82, 3);
  EXPECT_NEAR(sde::bidisk_sup_dist(path), bb.stats(82, 3).sup_dist, 1e-12);
  const std::size_t n = 1000;
  std::vector<double> h1(n), h2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto st = bb.stats(83, i);
    h1[i] = st.sup_h1;
    h2[i] = st.sup_h2;
  }
  const double m1 = mean(h1), m2 = mean(h2);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (h1[i] - m1) * (h2[i] - m2);
    sxx += (h1[i] - m1) * (h1[i] - m1);
    syy += (h2[i] - m2) * (h2[i] - m2);
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Comparison, OrderingHolds) {
  const int n = 1000;
  int up = 0, lo = 0;
  for (int i = 0; i < n; ++i) {
    const auto r = sde::comparison_detail(10.0, 1.0, 0.5, 1.0, 1e-3, 91, i);
    up += r.upper;
    lo += r.lower;
  }
  EXPECT_GE(up, 999);
  EXPECT_GE(lo, 999);
  EXPECT_THROW(sde::comparison_check(1.0, 5.0, 0.5, 1.0, 1e-3, 1), hypbridge::DomainError);
}
