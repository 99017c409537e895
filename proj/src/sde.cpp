#include "hypbridge/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hypbridge/errors.hpp"
#include "hypbridge/rng.hpp"

namespace hypbridge::sde {

namespace {

using hypbridge::detail::require;

double pos_sqrt(double y) { return y > 0.0 ? std::sqrt(y) : 0.0; }

double log_cosh(double x) {
  x = std::abs(x);
  return x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
}

std::size_t grid_steps(double T, double h) {
  return static_cast<std::size_t>(std::ceil(T / h - 1e-9));
}

double grid_time(std::size_t n, double T, double h) { return std::min(T, static_cast<double>(n) * h); }

// Probability that a Brownian bridge with variance rate sigma2 over dt,
// pinned at y0 < a and y1 < a, reaches a.
double bridge_cross_prob(double a, double y0, double y1, double sigma2, double dt) {
  if (sigma2 <= 0.0) return 0.0;
  return std::exp(-2.0 * (a - y0) * (a - y1) / (sigma2 * dt));
}

// exp(w^2) erfc(w), with the asymptotic series once erfc underflows
double erfcx(double w) {
  if (w < 25.0) return std::exp(w * w) * std::erfc(w);
  const double iw2 = 1.0 / (w * w);
  return (1.0 - 0.5 * iw2 + 0.75 * iw2 * iw2) / (w * std::sqrt(M_PI));
}

// log E[exp(beta dL) | R_0 = x, R_dt = y] for Brownian motion reflected at 0
// over one step, dL its local time at 0. The conditional law of dL given the
// endpoints is exact for any constant drift.
double log_local_time_mgf(double beta, double x, double y, double dt) {
  if (beta == 0.0) return 0.0;
  const double z = (x + y - beta * dt) / std::sqrt(dt);
  // P[dL > 0 | x, y] = 2q/(1+q), q = exp(-2xy/dt)
  const double lq = -2.0 * x * y / dt;
  const double log_term = lq - std::log1p(std::exp(lq)) + std::log(erfcx(z / std::sqrt(2.0)));
  return std::log1p(beta * std::sqrt(2.0 * M_PI * dt) * std::exp(log_term));
}

void check_step(double T, double h) {
  require(T > 0.0 && std::isfinite(T), "horizon must be positive");
  require(h > 0.0 && std::isfinite(h), "step must be positive");
}

}  // namespace

void CirSpec::validate() const {
  require(c > 0.0, "CirSpec: c must be positive");
  require(k > 0.0, "CirSpec: k must be positive");
  require(y0 >= 0.0, "CirSpec: y0 must be nonnegative");
  require(std::isfinite(nu) && std::isfinite(alpha), "CirSpec: nu and alpha must be finite");
}

double CirSpec::drift(double y) const {
  const double r = pos_sqrt(y);
  return -2.0 * nu * r * (std::tanh(c * r) + alpha) + k;
}

std::vector<double> uniform_grid(double T, double h) {
  check_step(T, h);
  const std::size_t n = grid_steps(T, h);
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = grid_time(i, T, h);
  return t;
}

namespace {

// One step of the chosen scheme for the state y = Y_t.
struct CirStepper {
  const CirSpec& spec;
  CirScheme scheme;

  double step(double y, double dt, double xi) const {
    if (scheme == CirScheme::full_truncation) {
      const double y1 = y + 2.0 * pos_sqrt(y) * std::sqrt(dt) * xi + spec.drift(y) * dt;
      return std::max(y1, 0.0);
    }
    const double r = pos_sqrt(y);
    double drift = -spec.nu * (std::tanh(spec.c * r) + spec.alpha);
    // singular (k-1)/2R term, floored at the diffusive scale
    if (spec.k != 1.0) drift += (spec.k - 1.0) / (2.0 * std::max(r, std::sqrt(dt)));
    const double r1 = std::abs(r + drift * dt + std::sqrt(dt) * xi);
    return r1 * r1;
  }

  double crossing_prob(double a, double y0, double y1, double dt) const {
    if (scheme == CirScheme::full_truncation) return bridge_cross_prob(a, y0, y1, 4.0 * y0, dt);
    return bridge_cross_prob(std::sqrt(a), pos_sqrt(y0), pos_sqrt(y1), 1.0, dt);
  }
};

const char* scheme_name(CirScheme scheme) {
  return scheme == CirScheme::full_truncation ? "full-truncation-euler" : "root-reflected-euler";
}

}  // namespace

PathSample simulate_cir(const CirSpec& spec, double T, double h, std::uint64_t seed, std::uint64_t path,
                        CirScheme scheme) {
  spec.validate();
  PathSample out;
  out.times = uniform_grid(T, h);
  out.values.resize(out.times.size());
  out.seed = seed;
  out.path = path;
  out.scheme = scheme_name(scheme);
  out.step = h;
  rng::PathRng rng(seed, path);
  const CirStepper stepper{spec, scheme};
  double y = spec.y0;
  out.values[0] = y;
  for (std::size_t n = 0; n + 1 < out.times.size(); ++n) {
    y = stepper.step(y, out.times[n + 1] - out.times[n], rng.normal());
    out.values[n + 1] = y;
  }
  return out;
}

namespace {

// Shared driver for plain and importance-sampled first passage. `on_step`
// receives (y_prev, y_next, dt) for every completed step before the hit.
template <typename OnStep, typename OnHit>
HitRecord run_first_passage(const CirSpec& sim, double a, double deadline, double h, std::uint64_t seed,
                            std::uint64_t path, const PassageOptions& opts, OnStep&& on_step, OnHit&& on_hit) {
  HitRecord rec;
  rec.weight = 1.0;
  if (sim.y0 >= a) {
    rec.hit = true;
    rec.time = 0.0;
    on_hit(rec, sim.y0, sim.y0, 0.0, 0.0);
    return rec;
  }
  rng::PathRng rng(seed, path);
  const CirStepper stepper{sim, opts.scheme};
  const std::size_t steps = grid_steps(deadline, h);
  double y = sim.y0;
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = grid_time(n, deadline, h);
    const double t1 = grid_time(n + 1, deadline, h);
    const double dt = t1 - t0;
    const double y1 = stepper.step(y, dt, rng.normal());
    if (y1 >= a) {
      rec.hit = true;
      rec.time = t1;
      on_hit(rec, y, y1, dt, dt);
      return rec;
    }
    if (opts.rule == CrossingRule::bridge) {
      const double u = rng.uniform();
      if (u < stepper.crossing_prob(a, y, y1, dt)) {
        rec.hit = true;
        rec.time = t0 + 0.5 * dt;
        on_hit(rec, y, a, dt, 0.5 * dt);
        return rec;
      }
    }
    on_step(y, y1, dt);
    y = y1;
  }
  rec.hit = false;
  return rec;
}

}  // namespace

HitRecord first_passage(const CirSpec& spec, double a, double deadline, double h, std::uint64_t seed,
                        std::uint64_t path, const PassageOptions& opts) {
  spec.validate();
  check_step(deadline, h);
  require(a > 0.0, "first_passage: barrier must be positive");
  return run_first_passage(
      spec, a, deadline, h, seed, path, opts, [](double, double, double) {},
      [](HitRecord&, double, double, double, double) {});
}

double girsanov_integrand(const CirSpec& spec, double x) {
  const double r = pos_sqrt(x);
  const double th = std::tanh(spec.c * r);
  const double sech2 = 1.0 - th * th;
  double val = 1.0 + 2.0 * spec.alpha * th + spec.alpha * spec.alpha + (spec.c - 1.0) * sech2;
  if (spec.k != 1.0) val += r > 0.0 ? (spec.k - 1.0) * (th + spec.alpha) / r : (spec.k - 1.0) * spec.c;
  return val;
}

double girsanov_log_prefactor(const CirSpec& spec, double a) {
  auto phi = [&](double r) { return log_cosh(spec.c * r) / spec.c + spec.alpha * r; };
  return -(2.0 * spec.nu + 1.0) * (phi(std::sqrt(a)) - phi(std::sqrt(spec.y0)));
}

HitRecord first_passage_girsanov(const CirSpec& spec, double a, double deadline, double h, std::uint64_t seed,
                                 std::uint64_t path, const PassageOptions& opts) {
  spec.validate();
  check_step(deadline, h);
  require(a > 0.0, "first_passage_girsanov: barrier must be positive");
  require(spec.k >= 1.0, "first_passage_girsanov: requires k >= 1");
  require(spec.alpha == 0.0 || spec.k == 1.0, "first_passage_girsanov: alpha != 0 requires k == 1");
  CirSpec proposal = spec;
  proposal.nu = -(spec.nu + 1.0);
  double exponent = 0.0;
  // With alpha != 0, Phi'(0) = alpha and the reflection of sqrt(Y) at 0 adds
  // exp((2nu+1) alpha L) to the density, L the local time of sqrt(Y) at 0.
  const double beta = (2.0 * spec.nu + 1.0) * spec.alpha;
  double log_local = 0.0;
  const double log_pre = girsanov_log_prefactor(spec, a);
  auto on_step = [&](double y0, double y1, double dt) {
    exponent += 0.5 * (girsanov_integrand(spec, y0) + girsanov_integrand(spec, y1)) * dt;
    log_local += log_local_time_mgf(beta, pos_sqrt(y0), pos_sqrt(y1), dt);
  };
  auto on_hit = [&](HitRecord& rec, double y0, double y1, double dt, double dt_used) {
    exponent += 0.5 * (girsanov_integrand(spec, y0) + girsanov_integrand(spec, y1)) * dt_used;
    log_local += log_local_time_mgf(beta, pos_sqrt(y0), pos_sqrt(y1), dt);
    rec.exponent = exponent;
    rec.weight = std::exp(log_pre + (spec.nu + 0.5) * exponent + log_local);
  };
  HitRecord rec = run_first_passage(proposal, a, deadline, h, seed, path, opts, on_step, on_hit);
  if (!rec.hit) {
    rec.weight = 0.0;
    rec.exponent = exponent;
  }
  return rec;
}

namespace {

// log density of the reflected Euler step x -> |x + b dt + sqrt(dt) xi| at y
double log_folded_step(double x, double y, double b, double dt) {
  const double m = x + b * dt;
  const double e1 = -0.5 * (y - m) * (y - m) / dt;
  const double e2 = -0.5 * (y + m) * (y + m) / dt;
  const double hi = std::max(e1, e2);
  const double lo = std::min(e1, e2);
  return (lo - hi < -40.0 ? hi : hi + std::log1p(std::exp(lo - hi))) - 0.5 * std::log(2.0 * M_PI * dt);
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return lo - hi < -40.0 ? hi : hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

HitRecord first_passage_mixture(const CirSpec& spec, double a, double deadline, double h, std::uint64_t seed,
                                std::uint64_t path, CrossingRule rule) {
  spec.validate();
  check_step(deadline, h);
  require(a > 0.0, "first_passage_mixture: barrier must be positive");
  HitRecord rec;
  if (spec.y0 >= a) {
    rec.hit = true;
    rec.time = 0.0;
    return rec;
  }
  rng::PathRng rng(seed, path);
  const std::size_t steps = grid_steps(deadline, h);
  const auto m_switch = static_cast<std::size_t>(rng.uniform() * static_cast<double>(steps));
  const double b_bar = std::sqrt(a);
  const double lift = 2.0 * spec.nu + 1.0;
  const double log_n = std::log(static_cast<double>(steps));
  double r = std::sqrt(spec.y0);
  double log_s = -std::numeric_limits<double>::infinity();  // log of sum_m prod_{j >= m} rho_j
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = grid_time(n, deadline, h);
    const double t1 = grid_time(n + 1, deadline, h);
    const double dt = t1 - t0;
    const double dphi = std::tanh(spec.c * r) + spec.alpha;
    double b_target = -spec.nu * dphi;
    if (spec.k != 1.0) b_target += (spec.k - 1.0) / (2.0 * std::max(r, std::sqrt(dt)));
    const double b_prop = b_target + lift * std::max(dphi, 0.0);
    const double b = n >= m_switch ? b_prop : b_target;
    const double r1 = std::abs(r + b * dt + std::sqrt(dt) * rng.normal());
    const double log_rho = log_folded_step(r, r1, b_prop, dt) - log_folded_step(r, r1, b_target, dt);
    log_s = log_rho + log_add(log_s, 0.0);
    bool hit = r1 >= b_bar;
    double time = t1;
    if (!hit && rule == CrossingRule::bridge && rng.uniform() < bridge_cross_prob(b_bar, r, r1, 1.0, dt)) {
      hit = true;
      time = t0 + 0.5 * dt;
    }
    if (hit) {
      const double rest = static_cast<double>(steps - 1 - n);
      rec.hit = true;
      rec.time = time;
      rec.exponent = log_s;
      rec.weight = std::exp(log_n - (rest > 0.0 ? log_add(log_s, std::log(rest)) : log_s));
      return rec;
    }
    r = r1;
  }
  rec.hit = false;
  rec.weight = 0.0;
  return rec;
}

HitRecord jacobi_first_passage(double nu, double q, double x, double a, double cutoff, double h,
                               std::uint64_t seed, std::uint64_t path, CrossingRule rule) {
  check_step(cutoff, h);
  require(q >= 0.0, "jacobi_first_passage: q must be nonnegative");
  require(a > 0.0 && x >= 0.0, "jacobi_first_passage: requires 0 <= x and a > 0");
  HitRecord rec;
  const double b = std::sqrt(a);
  double y = std::sqrt(x);
  if (y >= b) {
    rec.hit = true;
    rec.time = 0.0;
    return rec;
  }
  rng::PathRng rng(seed, path);
  const std::size_t steps = grid_steps(cutoff, h);
  constexpr double kFloor = 1e-12;
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = grid_time(n, cutoff, h);
    const double t1 = grid_time(n + 1, cutoff, h);
    const double dt = t1 - t0;
    const double ys = std::max(y, kFloor);
    const double drift = -nu * std::tanh(ys) + (q > 0.0 ? q / std::tanh(ys) : 0.0);
    double y1 = std::abs(y + drift * dt + std::sqrt(dt) * rng.normal());
    if (y1 >= b) {
      rec.hit = true;
      rec.time = rule == CrossingRule::bridge ? t0 + dt * (b - y) / (y1 - y) : t1;
      return rec;
    }
    if (rule == CrossingRule::bridge && rng.uniform() < bridge_cross_prob(b, y, y1, 1.0, dt)) {
      rec.hit = true;
      rec.time = t0 + 0.5 * dt;
      return rec;
    }
    y = y1;
  }
  rec.hit = false;
  return rec;
}

double TimeChangeSpec::c_a() const {
  if (a <= 0.0) return 1.0;
  const double r = std::sqrt(a);
  return std::tanh(r) / r;
}

double TimeChangeSpec::c_nu() const { return (nu + 1.0) * c_a(); }

double TimeChangeSpec::psi(double t) const {
  const double cn = c_nu();
  if (cn == 0.0) return t;
  return -std::expm1(-2.0 * cn * t) / (2.0 * cn);
}

double TimeChangeSpec::psi_limit() const {
  const double cn = c_nu();
  return cn > 0.0 ? 1.0 / (2.0 * cn) : std::numeric_limits<double>::infinity();
}

PathSample cir_via_timechange(double k, double a, double nu, double T, double h, std::uint64_t seed,
                              std::uint64_t path) {
  require(k > 0.0, "cir_via_timechange: k must be positive");
  require(a >= 0.0, "cir_via_timechange: a must be nonnegative");
  const TimeChangeSpec tc{k, a, nu};
  PathSample out;
  out.times = uniform_grid(T, h);
  out.values.resize(out.times.size());
  out.seed = seed;
  out.path = path;
  out.scheme = "sqbessel-exact-timechange";
  out.step = h;
  rng::PathRng rng(seed, path);
  const double cn = tc.c_nu();
  double x = 0.0;  // squared Bessel at the deformed time
  double tau = 0.0;
  out.values[0] = 0.0;
  for (std::size_t n = 0; n + 1 < out.times.size(); ++n) {
    const double tau1 = tc.psi(out.times[n + 1]);
    const double delta = tau1 - tau;
    long poisson = 0;
    if (x > 0.0) poisson = std::poisson_distribution<long>(x / (2.0 * delta))(rng.engine());
    x = 2.0 * delta * std::gamma_distribution<double>(0.5 * k + poisson, 1.0)(rng.engine());
    tau = tau1;
    out.values[n + 1] = std::exp(2.0 * cn * out.times[n + 1]) * x;
  }
  return out;
}

PathSample simulate_linear_cir(double k, double a, double nu, double T, double h, std::uint64_t seed,
                               std::uint64_t path) {
  require(k > 0.0, "simulate_linear_cir: k must be positive");
  const double cn = TimeChangeSpec{k, a, nu}.c_nu();
  PathSample out;
  out.times = uniform_grid(T, h);
  out.values.resize(out.times.size());
  out.seed = seed;
  out.path = path;
  out.scheme = "full-truncation-euler";
  out.step = h;
  rng::PathRng rng(seed, path);
  double x = 0.0;
  out.values[0] = x;
  for (std::size_t n = 0; n + 1 < out.times.size(); ++n) {
    const double dt = out.times[n + 1] - out.times[n];
    const double xp = std::max(x, 0.0);
    x = xp + 2.0 * std::sqrt(xp * dt) * rng.normal() + (2.0 * cn * xp + k) * dt;
    x = std::max(x, 0.0);
    out.values[n + 1] = x;
  }
  return out;
}

namespace {

Vec normal_vector(rng::PathRng& rng, int d) {
  Vec xi(d);
  for (int i = 0; i < d; ++i) xi[i] = rng.normal();
  return xi;
}

// exp map on raw coordinates for curvature -c^2
Vec step_exp(const Vec& z, const Vec& v, double c) {
  const double len = v.norm();
  if (len == 0.0) return z;
  return hypgeo::detail::unit_geodesic<double>(z, v / len, c * len);
}

}  // namespace

HPathSample simulate_hyp_bm(int d, double c, const Point& z0, double T, double h, std::uint64_t seed,
                            std::uint64_t path) {
  require(z0.dim() == d, "simulate_hyp_bm: start point has wrong dimension");
  require(c > 0.0, "simulate_hyp_bm: c must be positive");
  HPathSample out;
  out.times = uniform_grid(T, h);
  out.seed = seed;
  out.path = path;
  out.scheme = "geodesic-random-walk";
  out.step = h;
  out.points.reserve(out.times.size());
  out.points.push_back(z0);
  rng::PathRng rng(seed, path);
  Vec z = z0.coords();
  for (std::size_t n = 0; n + 1 < out.times.size(); ++n) {
    const double dt = out.times[n + 1] - out.times[n];
    z = step_exp(z, std::sqrt(dt) * normal_vector(rng, d), c);
    out.points.emplace_back(z);
  }
  return out;
}

void BridgeSpec::validate() const {
  const int d = x.dim();
  require(d == 2 || d == 3, "BridgeSpec: supported dimensions are d = 2 and d = 3");
  require(v.size() == d, "BridgeSpec: direction has wrong dimension");
  require(std::abs(v.norm() - 1.0) < 1e-9, "BridgeSpec: direction must be a unit vector");
  require(s >= 0.0 && std::isfinite(s), "BridgeSpec: separation must be nonnegative");
  require(c > 0.0, "BridgeSpec: c must be positive");
  require(horizon == 1.0, "BridgeSpec: horizon is fixed to 1");
  require(step > 0.0 && step < 0.5, "BridgeSpec: step must lie in (0, 0.5)");
  // The adaptive step is at most (1 - t)/20 near the end, so the last step
  // before the cut is always at most end_cut / 20.
  require(end_cut > 0.0 && end_cut < 0.5, "BridgeSpec: end_cut must lie in (0, 0.5)");
}

Point BridgeSpec::y() const { return hypgeo::exp_map(x, Vec(s * v), c); }

BridgeSimulator::BridgeSimulator(const BridgeSpec& spec)
    : spec_(spec), d_(spec.x.dim()), normalizer_(hypgeo::HalfSpaceIsometry<double>::identity(spec.x.dim())) {
  spec_.validate();
  normalizer_ = hypgeo::HalfSpaceIsometry<double>::normalizing(spec_.x, spec_.v);
  if (d_ % 2 == 0) {
    const double c = spec_.c;
    const double tau_min = 0.5 * c * c * spec_.end_cut;
    const double tau_max = c * c * spec_.horizon;
    const double rho_max = c * spec_.s + 10.0 * c * std::sqrt(std::max(spec_.s, 1.0)) + 5.0;
    table_ = std::make_shared<kernels::DriftTable>(d_, tau_min, tau_max, 1e-4, rho_max);
  }
}

double BridgeSimulator::drift(double tau, double rho) const {
  const double c = spec_.c;
  if (rho <= 0.0) return 0.0;
  if (table_) return c * (*table_)(c * c * tau, c * rho);
  return kernels::grad_log_heat(d_, c, tau, rho);
}

template <typename Visitor>
void BridgeSimulator::run(std::uint64_t seed, std::uint64_t path, Visitor&& visit) const {
  const double c = spec_.c;
  const double h = spec_.step;
  const double t_stop = spec_.horizon - spec_.end_cut;
  Vec y = Vec::Zero(d_);
  y[d_ - 1] = std::exp(c * spec_.s);
  Vec z = Vec::Zero(d_);
  z[d_ - 1] = 1.0;
  rng::PathRng rng(seed, path);
  double t = 0.0;
  std::size_t n = 0;
  visit.node(0.0, z, Vec::Zero(d_));
  while (t < t_stop) {
    const double tau = spec_.horizon - t;
    double t_next = static_cast<double>(n + 1) * h;
    bool uniform = true;
    if (t_next > t + tau / 20.0) {
      t_next = t + tau / 20.0;
      uniform = false;
    }
    if (t_next >= t_stop - 1e-15) t_next = t_stop;
    const double dt = t_next - t;
    auto [u, rho1] = hypgeo::detail::unit_direction<double>(z, y);
    const Vec V = drift(tau, rho1 / c) * u;
    visit.drift(t, z, V);
    z = step_exp(z, Vec(std::sqrt(dt) * normal_vector(rng, d_) + dt * V), c);
    if (uniform) ++n;
    t = t_next;
    visit.node(t, z, V);
  }
  visit.end(z, y);
}

HPathSample BridgeSimulator::path(std::uint64_t seed, std::uint64_t path) const {
  HPathSample out;
  out.seed = seed;
  out.path = path;
  out.scheme = "geodesic-euler-bridge";
  out.step = spec_.step;
  struct Recorder {
    HPathSample& out;
    const hypgeo::HalfSpaceIsometry<double>& iso;
    void node(double t, const Vec& z, const Vec&) {
      out.times.push_back(t);
      out.points.emplace_back(iso.inverse(z));
    }
    void drift(double, const Vec&, const Vec&) {}
    void end(const Vec&, const Vec& y) {
      out.times.push_back(1.0);
      out.points.emplace_back(iso.inverse(y));
    }
  } rec{out, normalizer_};
  run(seed, path, rec);
  return out;
}

BridgeStats BridgeSimulator::stats(std::uint64_t seed, std::uint64_t path, const SandwichOptions& sandwich) const {
  const double c = spec_.c;
  const double s = spec_.s;
  const int d = d_;
  const double e_threshold = std::pow(s, 0.75);
  BridgeStats st;
  bool mid_done = false;
  auto gamma_dist = [&](const Vec& z, double t) {
    Vec g = Vec::Zero(d);
    g[d - 1] = std::exp(c * s * t);
    return hypgeo::detail::unit_distance<double>(z, g) / c;
  };
  struct Visitor {
    BridgeStats& st;
    bool& mid_done;
    const decltype(gamma_dist)& gdist;
    double c, s, e_threshold;
    int d;
    const SandwichOptions& sw;

    void node(double t, const Vec& z, const Vec&) {
      const double r = z.head(d - 1).norm();
      const double g_line = std::asinh(r / z[d - 1]) / c;
      st.sup_f_line = std::max(st.sup_f_line, g_line * g_line);
      const double u = std::clamp(std::log(z.norm()), 0.0, c * s);
      Vec foot = Vec::Zero(d);
      foot[d - 1] = std::exp(u);
      const double g_seg = hypgeo::detail::unit_distance<double>(z, foot) / c;
      st.sup_f_segment = std::max(st.sup_f_segment, g_seg * g_seg);
      const double dg = gdist(z, t);
      st.sup_dist_gamma = std::max(st.sup_dist_gamma, dg);
      if (t <= 0.5 + 1e-12 && dg > e_threshold) st.in_E = false;
      if (!mid_done && t >= 0.5 - 1e-12) {
        st.mid_dist = gdist(z, 0.5);
        mid_done = true;
      }
    }
    void drift(double t, const Vec& z, const Vec& V) {
      if (sw.alpha <= 0.0 || t > sw.t_max + 1e-12) return;
      const double r = z.head(d - 1).norm();
      const double R = z.norm();
      const double g1 = std::asinh(r / z[d - 1]);
      const double g = g1 / c;
      // half the Laplacian of f = g^2 (curvature -c^2)
      double half_lap = 1.0;
      double grad_v = 0.0;
      if (r > 0.0) {
        const double th = std::tanh(g1);
        half_lap = 1.0 + g * c * (th + (d - 2) / th);
        Vec grad_dir(d);
        grad_dir.head(d - 1) = (z[d - 1] / (r * R)) * z.head(d - 1);
        grad_dir[d - 1] = -r / R;
        grad_v = grad_dir.dot(V);
      }
      const double b_obs = half_lap + 2.0 * g * grad_v;
      const double tz = std::tanh(c * g);
      const double b1 = 1.0 - 2.0 * s * g * (tz + sw.alpha);
      const double b2 = 0.5 * d - 2.0 * s * g * (tz - sw.alpha);
      ++st.sandwich_steps;
      if (b_obs < b1 - 1e-12 || b_obs > b2 + 1e-12) ++st.sandwich_violations;
    }
    void end(const Vec& z, const Vec& y) {
      st.end_dist = hypgeo::detail::unit_distance<double>(z, y) / c;
    }
  } vis{st, mid_done, gamma_dist, c, s, e_threshold, d, sandwich};
  run(seed, path, vis);
  return st;
}

HPathSample simulate_hyp_bridge(const BridgeSpec& spec, std::uint64_t seed, std::uint64_t path) {
  return BridgeSimulator(spec).path(seed, path);
}

double bridge_sup_f(const BridgeSpec& spec, const hypgeo::GeodesicSpec<double>& geo, std::uint64_t seed,
                    std::uint64_t path) {
  const HPathSample p = simulate_hyp_bridge(spec, seed, path);
  double sup = 0.0;
  for (const auto& z : p.points) {
    const double g = hypgeo::dist_to_geodesic(z, geo, spec.c).g;
    sup = std::max(sup, g * g);
  }
  return sup;
}

namespace {

BridgeSpec bidisk_factor_spec(double s, double h, double end_cut) {
  BridgeSpec spec;
  spec.x = Point::on_axis(2);
  spec.v = hypgeo::unit_vector<double>(2, 1);
  spec.s = s;
  spec.step = h;
  spec.end_cut = end_cut;
  return spec;
}

}  // namespace

BidiskBridge::BidiskBridge(double s, double h, double end_cut) : sim_(bidisk_factor_spec(s, h, end_cut)) {}

BidiskPath BidiskBridge::path(std::uint64_t seed, std::uint64_t path) const {
  const HPathSample a = sim_.path(seed, 2 * path);
  const HPathSample b = sim_.path(seed, 2 * path + 1);
  BidiskPath out;
  out.seed = seed;
  out.path = path;
  out.times = a.times;
  out.points.reserve(a.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) out.points.emplace_back(a.points[i], b.points[i]);
  return out;
}

BidiskStats BidiskBridge::stats(std::uint64_t seed, std::uint64_t path) const {
  const BidiskPath p = this->path(seed, path);
  BidiskStats st;
  st.sup_dist = bidisk_sup_dist(p);
  for (const auto& q : p.points) {
    st.sup_h1 = std::max(st.sup_h1, std::asinh(std::abs(q.p1[0]) / q.p1[1]));
    st.sup_h2 = std::max(st.sup_h2, std::asinh(std::abs(q.p2[0]) / q.p2[1]));
  }
  return st;
}

BidiskPath simulate_bidisk_bridge(double s, double h, std::uint64_t seed, std::uint64_t path, double end_cut) {
  return BidiskBridge(s, h, end_cut).path(seed, path);
}

BidiskStats bidisk_bridge_stats(double s, double h, std::uint64_t seed, std::uint64_t path, double end_cut) {
  return BidiskBridge(s, h, end_cut).stats(seed, path);
}

double bidisk_sup_dist(const BidiskPath& path) {
  double sup = 0.0;
  for (const auto& p : path.points) {
    // cheap upper bound: the squared distance at the midpoint of the two foot parameters
    const double R1 = std::hypot(p.p1[0], p.p1[1]);
    const double R2 = std::hypot(p.p2[0], p.p2[1]);
    const double half = 0.5 * std::abs(std::log(R1) - std::log(R2));
    const double ch = std::cosh(half);
    const double a1 = std::acosh(std::max(1.0, R1 / p.p1[1] * ch));
    const double a2 = std::acosh(std::max(1.0, R2 / p.p2[1] * ch));
    if (std::sqrt(a1 * a1 + a2 * a2) <= sup) continue;
    sup = std::max(sup, hypgeo::bidisk_dist_to_diagonal(p));
  }
  return sup;
}

ComparisonResult comparison_detail(double nu, double q, double alpha0, double T, double h, std::uint64_t seed,
                                   std::uint64_t path) {
  check_step(T, h);
  require(q >= 0.0, "comparison_check: q must be nonnegative");
  require(alpha0 > 0.0, "comparison_check: alpha0 must be positive");
  const double nu_p = nu - q / (alpha0 * std::tanh(alpha0));
  require(nu_p > 0.0, "comparison_check: requires nu' = nu - q/(alpha0 tanh alpha0) > 0");
  const CirSpec cir{nu, 0.0, 1.0, 2.0 * q + 1.0, 0.0};
  rng::PathRng rng(seed, path);
  const std::size_t steps = grid_steps(T, h);
  const double tol = 2.0 * std::sqrt(h);
  double y = 0.0;     // X^{nu,q} squared
  double r_up = 0.0;  // X^{nu',0}
  double r_lo = 0.0;  // X^{nu,0}
  ComparisonResult res;
  for (std::size_t n = 0; n < steps; ++n) {
    const double dt = grid_time(n + 1, T, h) - grid_time(n, T, h);
    const double db = std::sqrt(dt) * rng.normal();
    y = std::max(0.0, y + 2.0 * pos_sqrt(y) * db + cir.drift(y) * dt);
    r_up = std::max(0.0, r_up + db - nu_p * std::tanh(r_up) * dt);
    r_lo = std::max(0.0, r_lo + db - nu * std::tanh(r_lo) * dt);
    const double x = std::sqrt(y);
    res.max_upper_excess = std::max(res.max_upper_excess, x - (r_up + alpha0));
    res.max_lower_excess = std::max(res.max_lower_excess, r_lo - x);
  }
  res.upper = res.max_upper_excess <= tol;
  res.lower = res.max_lower_excess <= tol;
  return res;
}

bool comparison_check(double nu, double q, double alpha0, double T, double h, std::uint64_t seed,
                      std::uint64_t path) {
  const ComparisonResult r = comparison_detail(nu, q, alpha0, T, h, seed, path);
  return r.upper && r.lower;
}

}  // namespace hypbridge::sde
