#include "hypbridge/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "hypbridge/errors.hpp"
#include "hypbridge/parallel.hpp"

namespace hypbridge::estimators {

namespace {
using hypbridge::detail::require;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::naive: return "naive";
    case Method::girsanov: return "girsanov";
    case Method::girsanov_mixture: return "girsanov-mixture";
  }
  return "unknown";
}

EstimateCI summarize(const std::vector<double>& values, Method method) {
  require(!values.empty(), "summarize: no samples");
  EstimateCI est;
  est.n = values.size();
  est.method = method;
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    if (v != 0.0) ++est.hits;
  }
  est.mean = sum / est.n;
  double ss = 0.0;
  for (double v : values) ss += (v - est.mean) * (v - est.mean);
  est.se = est.n > 1 ? std::sqrt(ss / (est.n - 1) / est.n) : 0.0;
  return est;
}

namespace {

void rule_of_three(EstimateCI& est) {
  if (est.hits == 0) {
    est.zero_hits = true;
    est.se = 3.0 / static_cast<double>(est.n);
  } else if (est.hits == est.n) {
    est.all_hits = true;
    est.se = 3.0 / static_cast<double>(est.n);
  }
}

}  // namespace

EstimateCI proportion(const std::vector<double>& indicators) {
  for (double v : indicators) require(v == 0.0 || v == 1.0, "proportion: values must be 0 or 1");
  EstimateCI est = summarize(indicators, Method::naive);
  rule_of_three(est);
  return est;
}

EstimateCI hit_prob(const sde::CirSpec& spec, double a, double t, std::size_t n_paths, double h,
                    std::uint64_t seed, Method method, const HitOptions& opts) {
  require(n_paths >= 1, "hit_prob: need at least one path");
  if (method == Method::girsanov) {
    require(spec.k >= 1.0, "hit_prob: girsanov method requires k >= 1");
  }
  if (method == Method::girsanov_mixture) {
    require(opts.scheme == sde::CirScheme::root_reflected, "hit_prob: girsanov-mixture requires the root_reflected scheme");
  }
  std::vector<double> vals(n_paths);
  const sde::PassageOptions popts{opts.rule, opts.scheme};
  parallel::parallel_for(
      n_paths,
      [&](std::size_t i) {
        sde::HitRecord rec;
        switch (method) {
          case Method::naive: rec = sde::first_passage(spec, a, t, h, seed, i, popts); break;
          case Method::girsanov: rec = sde::first_passage_girsanov(spec, a, t, h, seed, i, popts); break;
          case Method::girsanov_mixture: rec = sde::first_passage_mixture(spec, a, t, h, seed, i, opts.rule); break;
        }
        vals[i] = rec.contribution();
      },
      opts.threads);
  EstimateCI est = summarize(vals, method);
  if (method == Method::naive) rule_of_three(est);
  return est;
}

std::vector<EstimateCI> mc_laplace_multi(double nu, double q, const std::vector<double>& lambdas, double x,
                                         double a, std::size_t n_paths, double h, std::uint64_t seed,
                                         double cutoff, const HitOptions& opts) {
  require(!lambdas.empty(), "mc_laplace: no lambda values");
  for (double l : lambdas) require(l > 0.0, "mc_laplace: lambda must be positive");
  require(q >= 0.5, "mc_laplace: requires q >= 1/2 (entrance boundary at 0)");
  require(x >= 0.0 && x <= a, "mc_laplace: requires 0 <= x <= a");
  std::vector<double> times(n_paths);
  parallel::parallel_for(
      n_paths,
      [&](std::size_t i) {
        const sde::HitRecord rec = sde::jacobi_first_passage(nu, q, x, a, cutoff, h, seed, i, opts.rule);
        times[i] = rec.hit ? *rec.time : -1.0;
      },
      opts.threads);
  std::vector<EstimateCI> out;
  std::vector<double> vals(n_paths);
  for (double l : lambdas) {
    for (std::size_t i = 0; i < n_paths; ++i) vals[i] = times[i] >= 0.0 ? std::exp(-l * times[i]) : 0.0;
    EstimateCI est = summarize(vals, Method::naive);
    est.bias_bound = std::exp(-l * cutoff);
    out.push_back(est);
  }
  return out;
}

EstimateCI mc_laplace(double nu, double q, double lambda, double x, double a, std::size_t n_paths, double h,
                      std::uint64_t seed, double cutoff, const HitOptions& opts) {
  return mc_laplace_multi(nu, q, {lambda}, x, a, n_paths, h, seed, cutoff, opts).front();
}

RateFit rate_fit_log(const std::vector<RatePoint>& pts) {
  require(pts.size() >= 3, "rate_fit: need at least three scales");
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (const auto& p : pts) {
    require(p.weight > 0.0 && std::isfinite(p.weight), "rate_fit: weights must be positive");
    require(std::isfinite(p.log_estimate), "rate_fit: log estimate must be finite");
    sw += p.weight;
    sx += p.weight * p.scale;
    sy += p.weight * p.log_estimate;
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : pts) {
    sxx += p.weight * (p.scale - mx) * (p.scale - mx);
    sxy += p.weight * (p.scale - mx) * (p.log_estimate - my);
    syy += p.weight * (p.log_estimate - my) * (p.log_estimate - my);
  }
  require(sxx > 0.0, "rate_fit: scales must not all coincide");
  RateFit fit;
  fit.points = pts;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.slope_stderr = std::sqrt(1.0 / sxx);
  fit.intercept_stderr = std::sqrt(1.0 / sw + mx * mx / sxx);
  for (const auto& p : pts) {
    const double r = p.log_estimate - fit.intercept - fit.slope * p.scale;
    fit.chi2 += p.weight * r * r;
  }
  fit.r2 = syy > 0.0 ? std::clamp(1.0 - fit.chi2 / syy, 0.0, 1.0) : 1.0;
  return fit;
}

RateFit rate_fit(const std::vector<std::pair<double, EstimateCI>>& points) {
  std::vector<RatePoint> pts;
  pts.reserve(points.size());
  for (const auto& [scale, est] : points) {
    require(est.mean > 0.0, "rate_fit: estimates must be positive");
    require(est.se > 0.0, "rate_fit: standard errors must be positive");
    const double rel = est.se / est.mean;
    pts.push_back({scale, std::log(est.mean), 1.0 / (rel * rel)});
  }
  return rate_fit_log(pts);
}

KSResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(a.size() >= 1 && b.size() >= 1, "ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  KSResult res;
  res.n = a.size();
  res.m = b.size();
  const double n = static_cast<double>(res.n), m = static_cast<double>(res.m);
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / n - j / m));
  }
  res.statistic = d;
  res.critical_1pct = 1.628 * std::sqrt((n + m) / (n * m));
  return res;
}

TailFit subgaussian_tail_fit(std::vector<double> sups) {
  require(sups.size() >= 100, "subgaussian_tail_fit: need at least 100 samples");
  std::sort(sups.begin(), sups.end());
  require(sups.front() < sups.back(), "subgaussian_tail_fit: degenerate sample");
  const double n = static_cast<double>(sups.size());
  std::vector<RatePoint> pts;
  double last_u = -1.0;
  for (int q = 50; q <= 99; ++q) {
    const auto idx = static_cast<std::size_t>(std::floor(q / 100.0 * (n - 1)));
    const double u = sups[idx];
    if (u == last_u) continue;
    last_u = u;
    const auto first = std::lower_bound(sups.begin(), sups.end(), u);
    const double tail = static_cast<double>(sups.end() - first) / n;
    pts.push_back({u * u, std::log(tail), 1.0});
  }
  require(pts.size() >= 3, "subgaussian_tail_fit: too few distinct quantiles");
  const RateFit fit = rate_fit_log(pts);
  TailFit out;
  out.slope = fit.slope;
  out.c_hat = -fit.slope;
  out.K_hat = std::exp(fit.intercept);
  out.r2 = fit.r2;
  out.residual = std::sqrt(fit.chi2 / pts.size());
  out.n_points = pts.size();
  return out;
}

}  // namespace hypbridge::estimators
