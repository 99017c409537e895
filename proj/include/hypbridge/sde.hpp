#pragma once

// Path simulation: square-root diffusions, squared Bessel processes and the
// CIR time change, hyperbolic Brownian motion and bridges, bidisk bridges.
//
// Every simulator takes (seed, path): the pair keys a counter-based random
// stream, so a path is reproducible on its own regardless of threading.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hypbridge/hypgeo.hpp"
#include "hypbridge/kernels.hpp"

namespace hypbridge::sde {

using Point = hypgeo::HPoint<double>;
using Vec = hypgeo::Vector<double>;

// dY = 2 sqrt(Y) dB - 2 nu sqrt(Y) (tanh(c sqrt(Y)) + alpha) dt + k dt
struct CirSpec {
  double nu = 0.0;
  double alpha = 0.0;
  double c = 1.0;
  double k = 1.0;
  double y0 = 0.0;

  void validate() const;
  double drift(double y) const;
};

// Discretization of the square-root diffusion. `full_truncation` is Euler on
// Y with drift and diffusion evaluated at Y+ and clipping after the step.
// `root_reflected` is Euler on R = sqrt(Y),
//   dR = dB + (-nu (tanh(c R) + alpha) + (k - 1)/(2R)) dt,
// reflected at 0; its diffusion coefficient is constant, which keeps the law
// of R accurate near 0 when k < 2.
enum class CirScheme { full_truncation, root_reflected };

// How a barrier crossing is detected between grid nodes. `grid` only looks at
// the nodes; `bridge` also accepts a crossing with the Brownian-bridge
// probability exp(-2 (a - y0)(a - y1) / (sigma^2 h)) given both end values.
enum class CrossingRule { grid, bridge };

struct PathSample {
  std::vector<double> times;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
  std::string scheme;
  double step = 0.0;
};

struct HPathSample {
  std::vector<double> times;
  std::vector<Point> points;
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
  std::string scheme;
  double step = 0.0;
};

struct HitRecord {
  bool hit = false;
  std::optional<double> time;
  double weight = 1.0;    // importance weight; 1 for plain sampling
  double exponent = 0.0;  // accumulated time integral of the Girsanov weight

  double contribution() const { return hit ? weight : 0.0; }
};

// Uniform grid 0 = t_0 < ... < t_N = T with t_n = n h (last step may be short).
std::vector<double> uniform_grid(double T, double h);

PathSample simulate_cir(const CirSpec& spec, double T, double h, std::uint64_t seed, std::uint64_t path = 0,
                        CirScheme scheme = CirScheme::full_truncation);

struct PassageOptions {
  CrossingRule rule = CrossingRule::grid;
  CirScheme scheme = CirScheme::full_truncation;
};

HitRecord first_passage(const CirSpec& spec, double a, double deadline, double h, std::uint64_t seed,
                        std::uint64_t path = 0, const PassageOptions& opts = {});

// Importance-sampled first passage. Paths follow the reversed drift
// +2(nu+1) sqrt(Y)(tanh(c sqrt(Y)) + alpha) + k; a hit before the deadline
// carries the weight
//   exp(-(2nu+1)(Phi(sqrt(a)) - Phi(sqrt(y0))) + (nu+1/2) int_0^{T_a} I(X_s) ds),
//   Phi(r) = log cosh(c r)/c + alpha r,
//   I(x) = 1 + 2 alpha tanh + alpha^2 + (c-1) sech^2 + (k-1)(tanh + alpha)/sqrt(x),
// with tanh, sech evaluated at c sqrt(x). The time integral uses the trapezoid rule.
HitRecord first_passage_girsanov(const CirSpec& spec, double a, double deadline, double h, std::uint64_t seed,
                                 std::uint64_t path = 0, const PassageOptions& opts = {});

// Importance-sampled first passage with a random switch step. The path follows
// the target dynamics for m steps, m uniform on the grid, then the drift
// b + (2nu+1) max(tanh(c R) + alpha, 0) in R = sqrt(Y) (root_reflected
// scheme). The weight is the exact likelihood ratio of the target Euler chain
// against the mixture over m, so the estimator is unbiased for the discrete
// chain. Waiting near the bottom of the potential before the excursion is
// covered by the mixture instead of by an exponentially large weight.
HitRecord first_passage_mixture(const CirSpec& spec, double a, double deadline, double h, std::uint64_t seed,
                                std::uint64_t path = 0, CrossingRule rule = CrossingRule::grid);

double girsanov_integrand(const CirSpec& spec, double x);
double girsanov_log_prefactor(const CirSpec& spec, double a);

// Jacobi-type radial diffusion dY = dB - nu tanh(Y) dt + q coth(Y) dt started
// at sqrt(x); returns the first time Y reaches sqrt(a) before `cutoff`.
HitRecord jacobi_first_passage(double nu, double q, double x, double a, double cutoff, double h,
                               std::uint64_t seed, std::uint64_t path = 0,
                               CrossingRule rule = CrossingRule::grid);

struct TimeChangeSpec {
  double k = 2.0;
  double a = 1.0;
  double nu = 0.0;

  double c_a() const;   // tanh(sqrt a)/sqrt a
  double c_nu() const;  // (nu+1) c_a
  double psi(double t) const;
  double psi_limit() const;
};

// X_t = exp(2 c_nu t) X^k_{psi(t)} with X^k a squared Bessel process of
// dimension k from 0, sampled exactly (Poisson-Gamma transitions) on psi(grid).
PathSample cir_via_timechange(double k, double a, double nu, double T, double h, std::uint64_t seed,
                              std::uint64_t path = 0);

// Full-truncation Euler for dX = 2 sqrt(X) dB + 2 c_nu X dt + k dt from 0.
PathSample simulate_linear_cir(double k, double a, double nu, double T, double h, std::uint64_t seed,
                               std::uint64_t path = 0);

// Geodesic random walk z <- exp_z(sqrt(h) xi) in the orthonormal frame.
HPathSample simulate_hyp_bm(int d, double c, const Point& z0, double T, double h, std::uint64_t seed,
                            std::uint64_t path = 0);

struct BridgeSpec {
  Point x = Point::on_axis(2);
  Vec v = hypgeo::unit_vector<double>(2, 1);
  double s = 0.0;
  double c = 1.0;
  double horizon = 1.0;
  double step = 5e-4;
  double end_cut = 1e-3;

  void validate() const;
  Point y() const;
};

struct SandwichOptions {
  double alpha = 0.0;    // 0 disables the check
  double t_max = 0.5;
};

struct BridgeStats {
  double sup_f_line = 0.0;      // sup of squared distance to the line through x, y
  double sup_f_segment = 0.0;   // same for the segment [x, y]
  double sup_dist_gamma = 0.0;  // sup_t rho(X_t, gamma(t)), gamma the constant-speed geodesic x -> y
  double end_dist = 0.0;        // rho(X_{1 - end_cut}, y) before the terminal snap
  double mid_dist = 0.0;        // rho(X_{1/2}, gamma(1/2))
  bool in_E = true;             // rho(X_t, phi(s t)) <= s^{3/4} for all t <= 1/2
  std::size_t sandwich_steps = 0;
  std::size_t sandwich_violations = 0;
};

// Bridge simulator in the frame where x = (0,...,0,1) and y = (0,...,0,e^{cs}).
// The drift grad log p(1-t, ., y) comes from the closed form for odd d and
// from an interpolation table for even d; the table is shared read-only.
class BridgeSimulator {
 public:
  explicit BridgeSimulator(const BridgeSpec& spec);

  const BridgeSpec& spec() const { return spec_; }
  HPathSample path(std::uint64_t seed, std::uint64_t path = 0) const;
  BridgeStats stats(std::uint64_t seed, std::uint64_t path = 0, const SandwichOptions& sandwich = {}) const;
  // Drift magnitude |V| at remaining time tau and distance rho to y.
  double drift(double tau, double rho) const;

 private:
  template <typename Visitor>
  void run(std::uint64_t seed, std::uint64_t path, Visitor&& visit) const;

  BridgeSpec spec_;
  int d_;
  hypgeo::HalfSpaceIsometry<double> normalizer_;
  std::shared_ptr<const kernels::DriftTable> table_;
};

HPathSample simulate_hyp_bridge(const BridgeSpec& spec, std::uint64_t seed, std::uint64_t path = 0);

// Discrete-time supremum of squared distance to `geo` along the bridge path.
double bridge_sup_f(const BridgeSpec& spec, const hypgeo::GeodesicSpec<double>& geo, std::uint64_t seed,
                    std::uint64_t path = 0);

struct BidiskPath {
  std::vector<double> times;
  std::vector<hypgeo::BidiskPoint<double>> points;
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
};

struct BidiskStats {
  double sup_dist = 0.0;     // sup_t distance to the diagonal geodesic
  double sup_h1 = 0.0;       // sup_t distance of factor 1 to its axis
  double sup_h2 = 0.0;
};

// Independent H^2 bridges from (0,1) to (0,e^s) in each factor; path p uses
// the streams 2p and 2p+1. Holds one drift table for both factors.
class BidiskBridge {
 public:
  BidiskBridge(double s, double h, double end_cut = 1e-3);

  BidiskPath path(std::uint64_t seed, std::uint64_t path = 0) const;
  BidiskStats stats(std::uint64_t seed, std::uint64_t path = 0) const;

 private:
  BridgeSimulator sim_;
};

// One-shot wrappers; each call builds its own drift table.
BidiskPath simulate_bidisk_bridge(double s, double h, std::uint64_t seed, std::uint64_t path = 0,
                                  double end_cut = 1e-3);
BidiskStats bidisk_bridge_stats(double s, double h, std::uint64_t seed, std::uint64_t path = 0,
                                double end_cut = 1e-3);

// Supremum of the bidisk distance to Lambda along a path.
double bidisk_sup_dist(const BidiskPath& path);

struct ComparisonResult {
  bool upper = true;        // X^{nu,q} <= X^{nu',0} + alpha0 on the grid
  bool lower = true;        // X^{nu,0} <= X^{nu,q}
  double max_upper_excess = 0.0;
  double max_lower_excess = 0.0;
};

// Shared-noise comparison of the radial process X^{nu,q} (as sqrt of a CIR
// path with k = 2q+1) with the reflected processes X^{nu',0} + alpha0 and
// X^{nu,0}, where nu' = nu - q/(alpha0 tanh alpha0). One-step tolerance 2 sqrt(h).
ComparisonResult comparison_detail(double nu, double q, double alpha0, double T, double h, std::uint64_t seed,
                                   std::uint64_t path = 0);
bool comparison_check(double nu, double q, double alpha0, double T, double h, std::uint64_t seed,
                      std::uint64_t path = 0);

}  // namespace hypbridge::sde
