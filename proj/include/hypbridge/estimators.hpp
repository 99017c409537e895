#pragma once

// Monte Carlo estimators with standard errors, rate regression and
// distributional tests. Per-path results are written to indexed slots and
// reduced in index order, so every estimate is independent of thread count.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hypbridge/sde.hpp"

namespace hypbridge::estimators {

// girsanov: the closed-form weight under the reversed drift from time 0.
// girsanov_mixture: random switch step, see sde::first_passage_mixture.
enum class Method { naive, girsanov, girsanov_mixture };

std::string to_string(Method m);

struct EstimateCI {
  double mean = 0.0;
  double se = 0.0;          // standard error of the mean
  std::size_t n = 0;
  Method method = Method::naive;
  std::size_t hits = 0;
  bool zero_hits = false;   // naive estimate with no hits; se is the rule-of-three bound 3/n
  bool all_hits = false;    // every path hit; se is the rule-of-three bound 3/n on 1 - mean
  double bias_bound = 0.0;  // deterministic truncation bias bound, when one applies

  double lower95() const { return mean - 1.96 * se; }
  double upper95() const { return mean + 1.96 * se; }
};

// Mean and standard error of per-path values, summed in index order.
EstimateCI summarize(const std::vector<double>& values, Method method = Method::naive);

// Proportion of nonzero entries in a 0/1 sample, with the rule-of-three
// standard error when the sample is all zeros or all ones.
EstimateCI proportion(const std::vector<double>& indicators);

struct HitOptions {
  sde::CrossingRule rule = sde::CrossingRule::grid;
  sde::CirScheme scheme = sde::CirScheme::full_truncation;
  int threads = 0;
};

EstimateCI hit_prob(const sde::CirSpec& spec, double a, double t, std::size_t n_paths, double h,
                    std::uint64_t seed, Method method, const HitOptions& opts = {});

// E[exp(-lambda T)] for the radial Jacobi diffusion, one path set shared by all
// lambdas. Paths still running at `cutoff` contribute 0; the resulting bias is
// at most exp(-lambda cutoff) and is reported in bias_bound.
std::vector<EstimateCI> mc_laplace_multi(double nu, double q, const std::vector<double>& lambdas, double x,
                                         double a, std::size_t n_paths, double h, std::uint64_t seed,
                                         double cutoff, const HitOptions& opts = {});
EstimateCI mc_laplace(double nu, double q, double lambda, double x, double a, std::size_t n_paths, double h,
                      std::uint64_t seed, double cutoff, const HitOptions& opts = {});

struct RatePoint {
  double scale;
  double log_estimate;
  double weight;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double r2 = 0.0;
  double chi2 = 0.0;  // weighted residual sum of squares
  std::vector<RatePoint> points;

  double slope_lower95() const { return slope - 1.96 * slope_stderr; }
  double slope_upper95() const { return slope + 1.96 * slope_stderr; }
};

// Weighted least squares of log(mean) on scale with weights (mean/se)^2.
RateFit rate_fit(const std::vector<std::pair<double, EstimateCI>>& points);
// Same fit from explicit (scale, log value, weight) triples.
RateFit rate_fit_log(const std::vector<RatePoint>& points);

struct KSResult {
  double statistic = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  double critical_1pct = 0.0;

  bool passes() const { return statistic < critical_1pct; }
};

KSResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct TailFit {
  double c_hat = 0.0;   // P[sup >= u] ~ K exp(-c u^2)
  double K_hat = 0.0;
  double slope = 0.0;   // = -c_hat
  double r2 = 0.0;
  double residual = 0.0;  // rms residual of the log-tail regression
  std::size_t n_points = 0;
};

// Regresses log P[sup >= u] on u^2 for u over the 50%-99% empirical quantiles.
TailFit subgaussian_tail_fit(std::vector<double> sups);

}  // namespace hypbridge::estimators
