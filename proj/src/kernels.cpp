#include "hypbridge/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hypbridge/errors.hpp"

namespace hypbridge::kernels {

namespace {

using hypbridge::detail::require;

constexpr int kMaxOrder = 12;

double log_sinh(double x) {
  if (x > 1.0) return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0);
  return std::log(std::sinh(x));
}

double log_cosh(double x) {
  x = std::abs(x);
  return x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
}

// Taylor coefficients of acosh(1 + w)^2 at w = 0, from the ODE
// (z^2 - 1) y'' + z y' = 2 written at the regular singular point z = 1.
const std::array<double, 160>& acosh_sq_at_one() {
  static const std::array<double, 160> coef = [] {
    std::array<double, 160> c{};
    c[0] = 0.0;
    c[1] = 2.0;
    for (int m = 1; m + 1 < static_cast<int>(c.size()); ++m)
      c[m + 1] = -static_cast<double>(m) * m * c[m] / ((m + 1.0) * (2.0 * m + 1.0));
    return c;
  }();
  return coef;
}

// log of ghat_n with h^{2n+1}_t(rho) = exp(-rho^2/2t) ghat_n(t, rho).
//
// With u = cosh(rho) the descent operator is -d/du, so
//   ghat_n = (-1)^n n! [w^n] exp(-(acosh(u + w)^2 - rho^2) / 2t),
// a truncated Taylor expansion in w. For rho >= 1 the coefficients come from
// the acosh^2 ODE in the rescaled variable w / sinh(rho) (no overflow for large
// rho); for rho < 1 the series at u = 1 is re-expanded at u.
double log_ghat(int n, double t, double rho) {
  if (n == 0) return 0.0;
  require(n <= kMaxOrder, "heat kernel: dimension too large");
  std::array<double, kMaxOrder + 1> a{};
  bool scaled = rho >= 1.0;
  if (scaled) {
    const double coth = 1.0 / std::tanh(rho);
    a[0] = rho * rho;
    a[1] = 2.0 * rho;
    if (n >= 2) a[2] = 0.5 * (2.0 - coth * a[1]);
    for (int m = 1; m + 2 <= n; ++m)
      a[m + 2] = -((2.0 * m + 1.0) * (m + 1.0) * coth * a[m + 1] + double(m) * m * a[m]) / ((m + 2.0) * (m + 1.0));
  } else {
    const auto& base = acosh_sq_at_one();
    const double delta = 2.0 * std::sinh(0.5 * rho) * std::sinh(0.5 * rho);  // cosh(rho) - 1
    for (int m = 1; m <= n; ++m) {
      double sum = 0.0;
      double binom = 1.0;  // C(j, m)
      double pw = 1.0;     // delta^{j-m}
      for (int j = m; j < static_cast<int>(base.size()); ++j) {
        const double term = binom * base[j] * pw;
        sum += term;
        if (j > m + 8 && std::abs(term) < 1e-18 * std::abs(sum)) break;
        binom = binom * (j + 1) / (j + 1 - m);
        pw *= delta;
      }
      a[m] = sum;
    }
  }
  // exp of the series b_m = -a_m / 2t (m >= 1), with e_0 = 1.
  std::array<double, kMaxOrder + 1> e{};
  e[0] = 1.0;
  for (int m = 1; m <= n; ++m) {
    double acc = 0.0;
    for (int j = 1; j <= m; ++j) acc += j * (-a[j] / (2.0 * t)) * e[m - j];
    e[m] = acc / m;
  }
  double val = (n % 2 == 0 ? 1.0 : -1.0) * e[n];
  if (!(val > 0.0) || !std::isfinite(val))
    throw NumericFailure("heat kernel: odd-dimensional descent lost positivity");
  double log_fact = std::lgamma(n + 1.0);
  double out = std::log(val) + log_fact;
  if (scaled) out -= n * log_sinh(rho);
  return out;
}

void check_query(int d, double t, double rho) {
  require(d >= 1, "heat kernel: dimension must be >= 1");
  require(t > 0.0 && std::isfinite(t), "heat kernel: t must be positive");
  require(rho >= 0.0 && std::isfinite(rho), "heat kernel: rho must be nonnegative");
}

// Even-dimensional kernel relative to exp(-rho^2/2t), in log form.
// Substituting s = rho + sigma^2 removes the inverse square-root singularity:
//   h^d = int_0^inf 2 sigma sinh(s) / sqrt(2 sinh(rho + w/2) sinh(w/2)) h^{d+1}(s) dsigma,
// with w = sigma^2. The integrand is divided by its sigma -> 0 limit (rho > 0).
double log_ghat_even(int d, double t, double rho) {
  const int n = d / 2;  // h^{d+1} = h^{2n+1}
  const double log_ref =
      rho > 0.0 ? std::log(2.0) + 0.5 * log_sinh(rho) + log_ghat(n, t, rho) : log_ghat(n, t, 0.0);
  auto f = [&](double sigma) -> double {
    const double w = sigma * sigma;
    if (w == 0.0) return rho > 0.0 ? 1.0 : 0.0;
    const double s = rho + w;
    const double lg = std::log(2.0 * sigma) + log_sinh(s) -
                      0.5 * (std::log(2.0) + log_sinh(rho + 0.5 * w) + log_sinh(0.5 * w)) + log_ghat(n, t, s) -
                      w * (2.0 * rho + w) / (2.0 * t);
    return std::exp(lg - log_ref);
  };
  // exponent w(2 rho + w)/2t reaches 40 here
  const double sigma_max = std::sqrt(80.0 * t / (rho + std::sqrt(rho * rho + 80.0 * t)));
  double err = 0.0;
  double l1 = 0.0;
  const double val =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, sigma_max, 15, 1e-12, &err, &l1);
  if (!(val > 0.0) || !std::isfinite(val) || err > 1e-9 * val)
    throw NumericFailure("h_even: quadrature did not converge (d=" + std::to_string(d) + ", t=" +
                         std::to_string(t) + ", rho=" + std::to_string(rho) + ")");
  return log_ref + std::log(val);
}

}  // namespace

double kcal(double a, double c) {
  require(a >= 0.0, "kcal: a must be nonnegative");
  require(c > 0.0, "kcal: c must be positive");
  return 2.0 / c * log_cosh(c * std::sqrt(a));
}

double log_h_odd(int d, double t, double rho) {
  check_query(d, t, rho);
  require(d % 2 == 1, "h_odd: d must be odd");
  return -rho * rho / (2.0 * t) + log_ghat((d - 1) / 2, t, rho);
}

double h_odd(int d, double t, double rho) { return std::exp(log_h_odd(d, t, rho)); }

double log_h_even(int d, double t, double rho) {
  check_query(d, t, rho);
  require(d % 2 == 0, "h_even: d must be even");
  return -rho * rho / (2.0 * t) + log_ghat_even(d, t, rho);
}

double h_even(int d, double t, double rho) { return std::exp(log_h_even(d, t, rho)); }

double log_heat_h(int d, double t, double rho) {
  return d % 2 == 1 ? log_h_odd(d, t, rho) : log_h_even(d, t, rho);
}

double heat_h(int d, double t, double rho) { return std::exp(log_heat_h(d, t, rho)); }

double grad_log_heat(int d, double c, double t, double rho) {
  check_query(d, t, rho);
  require(c > 0.0, "grad_log_heat: c must be positive");
  const double T = c * c * t;
  const double R = c * rho;
  if (R == 0.0) return 0.0;
  double log_ratio;
  if (d % 2 == 1) {
    log_ratio = log_ghat((d + 1) / 2, T, R) - log_ghat((d - 1) / 2, T, R);
  } else {
    log_ratio = log_ghat_even(d + 2, T, R) - log_ghat_even(d, T, R);
  }
  return c * std::exp(log_sinh(R) + log_ratio);
}

double heat_normalizer(int d, double t) {
  check_query(d, t, 0.0);
  const double m = (d - 1) * t;
  const double rho_max = m + std::sqrt(m * m + 100.0 * t);
  auto f = [&](double rho) {
    if (rho == 0.0) return d == 1 ? std::exp(log_heat_h(d, t, 0.0)) : 0.0;
    return std::exp(log_heat_h(d, t, rho) + (d - 1) * log_sinh(rho));
  };
  double err = 0.0;
  const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, rho_max, 15, 1e-12, &err);
  if (!(val > 0.0) || err > 1e-9 * val) throw NumericFailure("heat_normalizer: quadrature did not converge");
  const double sphere = 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
  return (d == 1 ? 2.0 : sphere) * val;
}

double log_dm_envelope(EnvelopeSide side, const EnvelopeParams& p, double t, double rho) {
  require(t > 0.0 && t <= 1.0, "dm_envelope: t must lie in (0, 1]");
  require(rho >= 0.0, "dm_envelope: rho must be nonnegative");
  require(p.K > 0.0 && p.k1 > 0.0 && p.k2 >= p.k1, "dm_envelope: invalid envelope parameters");
  const bool lower = side == EnvelopeSide::lower;
  const double k = lower ? p.k2 : p.k1;
  const double logK = lower ? -std::log(p.K) : std::log(p.K);
  return logK - 0.5 * p.d * std::log(t) + p.nu_exp() * std::log1p(rho) - k * rho - rho * rho / (2.0 * t);
}

double dm_envelope(EnvelopeSide side, const EnvelopeParams& p, double t, double rho) {
  return std::exp(log_dm_envelope(side, p, t, rho));
}

EnvelopeFit fit_envelope(int d, const std::vector<double>& ts, const std::vector<double>& rhos) {
  require(!ts.empty() && rhos.size() >= 3, "fit_envelope: need at least one t and three rho nodes");
  const double nu = 0.5 * (d - 1);
  std::vector<std::vector<double>> resid(ts.size(), std::vector<double>(rhos.size()));
  std::vector<double> slopes;
  double sxy_all = 0.0, sxx_all = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double t = ts[i];
    require(t > 0.0 && t <= 1.0, "fit_envelope: t must lie in (0, 1]");
    const double logZ = std::log(heat_normalizer(d, t));
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < rhos.size(); ++j) {
      const double rho = rhos[j];
      resid[i][j] = log_heat_h(d, t, rho) - logZ + 0.5 * d * std::log(t) + rho * rho / (2.0 * t) - nu * std::log1p(rho);
      mx += rho;
      my += resid[i][j];
    }
    mx /= rhos.size();
    my /= rhos.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t j = 0; j < rhos.size(); ++j) {
      sxy += (rhos[j] - mx) * (resid[i][j] - my);
      sxx += (rhos[j] - mx) * (rhos[j] - mx);
    }
    slopes.push_back(-sxy / sxx);
    sxy_all += sxy;
    sxx_all += sxx;
  }
  EnvelopeFit fit;
  fit.ts = ts;
  fit.rhos = rhos;
  fit.k_mid = -sxy_all / sxx_all;
  fit.params.d = d;
  fit.params.k1 = *std::min_element(slopes.begin(), slopes.end());
  fit.params.k2 = *std::max_element(slopes.begin(), slopes.end());
  if (!(fit.params.k1 > 0.0)) throw NumericFailure("fit_envelope: fitted decay rate is not positive");
  double logK = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t j = 0; j < rhos.size(); ++j) {
      const double r = resid[i][j];
      logK = std::max({logK, r + fit.params.k1 * rhos[j], -(r + fit.params.k2 * rhos[j])});
      lo = std::min(lo, r + fit.k_mid * rhos[j]);
      hi = std::max(hi, r + fit.k_mid * rhos[j]);
    }
    fit.oscillation = std::max(fit.oscillation, hi - lo);
  }
  fit.params.K = std::exp(logK + 1e-9) * (1.0 + 1e-12);
  if (fit.params.K <= 1.0) fit.params.K = std::nextafter(1.0, 2.0);

  fit.sandwich_holds = true;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double logZ = std::log(heat_normalizer(d, ts[i]));
    for (double rho : rhos) {
      const double lp = log_heat_h(d, ts[i], rho) - logZ;
      const double lo = log_dm_envelope(EnvelopeSide::lower, fit.params, ts[i], rho);
      const double hi = log_dm_envelope(EnvelopeSide::upper, fit.params, ts[i], rho);
      if (!(lo <= lp && lp <= hi)) fit.sandwich_holds = false;
    }
  }
  return fit;
}

namespace {

struct SeriesResult {
  double sum;
  double condition;  // sum |terms| / |sum|
};

SeriesResult gauss_series(double a, double b, double c, double z) {
  double sum = 1.0, comp = 0.0, abs_sum = 1.0, term = 1.0;
  for (int n = 0; n < 200000; ++n) {
    const double ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
    term *= ratio;
    if (term == 0.0) return {sum, abs_sum / std::abs(sum)};
    if (!std::isfinite(term) || std::abs(term) > 1e300) throw NumericFailure("hyp2f1: series terms overflow");
    // Kahan summation
    const double y = term - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    abs_sum += std::abs(term);
    if (std::abs(ratio) < 1.0 && std::abs(term) <= 1e-17 * std::abs(sum)) return {sum, abs_sum / std::abs(sum)};
  }
  throw NumericFailure("hyp2f1: series did not converge");
}

}  // namespace

double hyp2f1(double a, double b, double c, double z) {
  require(std::abs(z) < 1.0, "hyp2f1: requires |z| < 1");
  require(!(c <= 0.0 && c == std::floor(c)), "hyp2f1: c must not be a nonpositive integer");
  if (z == 0.0) return 1.0;
  SeriesResult direct = gauss_series(a, b, c, z);
  if (direct.condition > 4.0) {
    // Euler transform: F(a,b;c;z) = (1-z)^{c-a-b} F(c-a, c-b; c; z)
    SeriesResult euler = gauss_series(c - a, c - b, c, z);
    euler.sum *= std::pow(1.0 - z, c - a - b);
    if (euler.condition < direct.condition) direct = euler;
  }
  if (direct.condition > 1e6) throw NumericFailure("hyp2f1: catastrophic cancellation in series");
  return direct.sum;
}

double JacobiQuery::mu() const { return std::sqrt((nu - q) * (nu - q) + 2.0 * lambda); }

double laplace_fpt(const JacobiQuery& qy) {
  require(qy.nu >= 0.0 && qy.q >= 0.0, "laplace_fpt: nu and q must be nonnegative");
  require(qy.lambda > 0.0, "laplace_fpt: lambda must be positive");
  require(qy.a > 0.0 && qy.x >= 0.0 && qy.x <= qy.a, "laplace_fpt: requires 0 <= x <= a");
  const double mu = qy.mu();
  const double A = 0.5 * (qy.q - qy.nu - mu);
  const double B = 0.5 * (qy.q + 1.0 + qy.nu - mu);
  const double C = qy.q + 0.5;
  const double e = qy.nu + mu - qy.q;
  auto log_f = [&](double y) {
    const double th = std::tanh(y);
    const double F = hyp2f1(A, B, C, th * th);
    if (!(F > 0.0)) throw NumericFailure("laplace_fpt: hypergeometric factor is not positive");
    return e * log_cosh(y) + std::log(F);
  };
  if (qy.x == qy.a) return 1.0;
  return std::exp(log_f(std::sqrt(qy.x)) - log_f(std::sqrt(qy.a)));
}

double sqbessel_density(double k, double x) {
  require(k > 0.0, "sqbessel_density: k must be positive");
  require(x >= 0.0, "sqbessel_density: x must be nonnegative");
  if (x == 0.0) {
    if (k < 2.0) return std::numeric_limits<double>::infinity();
    return k == 2.0 ? 0.5 : 0.0;
  }
  return std::exp((0.5 * k - 1.0) * std::log(0.5 * x) - 0.5 * x - std::log(2.0) - std::lgamma(0.5 * k));
}

DriftTable::DriftTable(int d, double tau_min, double tau_max, double rho_min, double rho_max, std::size_t n_tau,
                       std::size_t n_rho)
    : d_(d), n_tau_(n_tau), n_rho_(n_rho) {
  require(d >= 1, "DriftTable: dimension must be >= 1");
  require(tau_min > 0.0 && tau_max > tau_min, "DriftTable: invalid tau range");
  require(rho_min > 0.0 && rho_max > rho_min, "DriftTable: invalid rho range");
  require(n_tau >= 4 && n_rho >= 4, "DriftTable: need at least 4 nodes per axis");
  lt0_ = std::log(tau_min);
  lt1_ = std::log(tau_max);
  lr0_ = std::log(rho_min);
  lr1_ = std::log(rho_max);
  dlt_ = (lt1_ - lt0_) / (n_tau - 1);
  dlr_ = (lr1_ - lr0_) / (n_rho - 1);
  values_.resize(n_tau * n_rho);
  for (std::size_t i = 0; i < n_tau; ++i) {
    const double tau = std::exp(lt0_ + i * dlt_);
    for (std::size_t j = 0; j < n_rho; ++j) {
      const double rho = std::exp(lr0_ + j * dlr_);
      values_[i * n_rho + j] = tau * grad_log_heat(d, 1.0, tau, rho) / rho;
    }
  }
}

bool DriftTable::in_range(double tau, double rho) const {
  const double lt = std::log(tau);
  return lt >= lt0_ - 1e-12 && lt <= lt1_ + 1e-12 && std::log(rho) <= lr1_ + 1e-12;
}

namespace {

// Catmull-Rom weights for fractional position f in [0, 1].
std::array<double, 4> cubic_weights(double f) {
  const double f2 = f * f, f3 = f2 * f;
  return {-0.5 * f3 + f2 - 0.5 * f, 1.5 * f3 - 2.5 * f2 + 1.0, -1.5 * f3 + 2.0 * f2 + 0.5 * f, 0.5 * f3 - 0.5 * f2};
}

}  // namespace

double DriftTable::operator()(double tau, double rho) const {
  if (rho <= 0.0) return 0.0;
  if (!in_range(tau, rho)) return grad_log_heat(d_, 1.0, tau, rho);
  // ratio is even and smooth in rho at 0: clamp below the grid
  const double lr = std::max(std::log(rho), lr0_);
  const double x = std::clamp((std::log(tau) - lt0_) / dlt_, 0.0, double(n_tau_ - 1));
  const double y = std::clamp((lr - lr0_) / dlr_, 0.0, double(n_rho_ - 1));
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), n_tau_ - 2);
  const auto j = std::min<std::size_t>(static_cast<std::size_t>(y), n_rho_ - 2);
  const auto wx = cubic_weights(x - i);
  const auto wy = cubic_weights(y - j);
  // ghost nodes by linear extrapolation
  auto at = [&](long ii, long jj) {
    const long ni = static_cast<long>(n_tau_), nj = static_cast<long>(n_rho_);
    auto lin = [&](long a, long b) {
      return node(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    };
    auto clamp_j = [&](long a, long b) {
      if (b < 0) return 2.0 * lin(a, 0) - lin(a, 1);
      if (b >= nj) return 2.0 * lin(a, nj - 1) - lin(a, nj - 2);
      return lin(a, b);
    };
    if (ii < 0) return 2.0 * clamp_j(0, jj) - clamp_j(1, jj);
    if (ii >= ni) return 2.0 * clamp_j(ni - 1, jj) - clamp_j(ni - 2, jj);
    return clamp_j(ii, jj);
  };
  double ratio = 0.0;
  for (int a = 0; a < 4; ++a) {
    double row = 0.0;
    for (int b = 0; b < 4; ++b) row += wy[b] * at(static_cast<long>(i) + a - 1, static_cast<long>(j) + b - 1);
    ratio += wx[a] * row;
  }
  return ratio * rho / tau;
}

}  // namespace hypbridge::kernels
