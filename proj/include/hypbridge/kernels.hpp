#pragma once

// Special functions and the (unnormalized) hyperbolic heat-kernel family.
//
// h^1_t(rho) = exp(-rho^2 / 2t) and h^{d+2} = -(1/sinh rho) d/drho h^d. Even
// dimensions come from the Abel-type transform
//   h^d_t(rho) = int_rho^inf sinh s / sqrt(cosh s - cosh rho) h^{d+1}_t(s) ds,
// which commutes with the descent operator, so the descent ratio is exactly 1
// in every dimension. The probability kernel of Brownian motion (generator
// Delta/2) on H^d is h^d_t up to a factor depending on t only.

#include <cstddef>
#include <vector>

namespace hypbridge::kernels {

// (2/c) log cosh(c sqrt(a))
double kcal(double a, double c);

double h_odd(int d, double t, double rho);
double log_h_odd(int d, double t, double rho);
double h_even(int d, double t, double rho);
double log_h_even(int d, double t, double rho);
// Dispatches on the parity of d.
double heat_h(int d, double t, double rho);
double log_heat_h(int d, double t, double rho);

// Radial derivative of log p^{d,c}_t(., y) at distance rho from y, signed
// toward y: for c = 1 this is sinh(rho) h^{d+2}_t(rho) / h^d_t(rho), and
// p^{d,c}_t(rho) = p^{d,1}_{c^2 t}(c rho) gives the general case.
double grad_log_heat(int d, double c, double t, double rho);

// Normalizing constant Z(t) = vol(S^{d-1}) int_0^inf h^d_t(rho) sinh^{d-1}(rho) drho.
double heat_normalizer(int d, double t);

enum class EnvelopeSide { lower, upper };

struct EnvelopeParams {
  double K = 1.0;
  double k1 = 1.0;
  double k2 = 1.0;
  int d = 3;
  double nu_exp() const { return 0.5 * (d - 1); }
};

// lower: K^{-1} t^{-d/2} (1+rho)^nu exp(-(k2 rho + rho^2/2t))
// upper: K      t^{-d/2} (1+rho)^nu exp(-(k1 rho + rho^2/2t))
double dm_envelope(EnvelopeSide side, const EnvelopeParams& params, double t, double rho);
double log_dm_envelope(EnvelopeSide side, const EnvelopeParams& params, double t, double rho);

struct EnvelopeFit {
  EnvelopeParams params;
  double k_mid = 0.0;            // pooled least-squares decay rate
  double oscillation = 0.0;      // max - min of the log residual at k_mid
  bool sandwich_holds = false;   // lower <= p <= upper at every node
  std::vector<double> ts;
  std::vector<double> rhos;
};

// Fits K, k1, k2 so that the normalized kernel p^d_t is sandwiched on the grid.
EnvelopeFit fit_envelope(int d, const std::vector<double>& ts, const std::vector<double>& rhos);

// Gauss hypergeometric function for |z| < 1.
double hyp2f1(double a, double b, double c, double z);

struct JacobiQuery {
  double nu = 0.0;
  double q = 0.0;
  double lambda = 1.0;
  double x = 0.0;  // start level (square of the starting point of the radial SDE)
  double a = 1.0;  // target level
  double mu() const;
};

// E[exp(-lambda T_a)] for dY = dB - nu tanh(Y) dt + q coth(Y) dt started at
// sqrt(x), with T_a the hitting time of sqrt(a).
double laplace_fpt(const JacobiQuery& query);

// Density of a squared Bessel process of dimension k at time 1 started at 0.
double sqbessel_density(double k, double x);

// Interpolated grad_log_heat(d, 1, tau, rho) stored as the smooth ratio
// tau * G / rho on a log-spaced grid, bicubic (Catmull-Rom) in (log tau, log rho).
// Queries outside the grid fall back to direct evaluation.
class DriftTable {
 public:
  DriftTable(int d, double tau_min, double tau_max, double rho_min, double rho_max,
             std::size_t n_tau = 48, std::size_t n_rho = 96);

  double operator()(double tau, double rho) const;
  bool in_range(double tau, double rho) const;
  int dim() const { return d_; }

 private:
  double node(std::size_t i, std::size_t j) const { return values_[i * n_rho_ + j]; }

  int d_;
  double lt0_, lt1_, lr0_, lr1_;
  std::size_t n_tau_, n_rho_;
  double dlt_, dlr_;
  std::vector<double> values_;
};

}  // namespace hypbridge::kernels
