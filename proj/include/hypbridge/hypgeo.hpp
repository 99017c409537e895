#pragma once

// Half-space model of real hyperbolic space H^d.
//
// Curvature convention: the metric is |dz|^2 / (c z_d)^2, i.e. constant
// sectional curvature -c^2. With this choice the distance to a geodesic line
// is g(z) = c^{-1} asinh(r_{d-1}/z_d) and heat kernels scale as
// p^{d,c}_t(rho) = p^{d,1}_{c^2 t}(c rho).
//
// Tangent vectors are always expressed in the orthonormal frame
// { c z_d e_1, ..., c z_d e_d } at their base point, so a tangent vector of
// Euclidean length L has Riemannian length L.

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <utility>

#include <Eigen/Core>
#include <boost/math/tools/minima.hpp>

#include "hypbridge/errors.hpp"

namespace hypbridge::hypgeo {

inline constexpr int kMaxDim = 8;

// Fixed-capacity dynamic vector: no heap traffic inside simulation loops.
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

template <typename Scalar>
Vector<Scalar> unit_vector(int dim, int axis) {
  Vector<Scalar> e = Vector<Scalar>::Zero(dim);
  e[axis] = Scalar(1);
  return e;
}

template <typename Scalar>
class HPoint {
 public:
  using VectorType = Vector<Scalar>;

  explicit HPoint(VectorType coords) : coords_(std::move(coords)) { validate(); }

  HPoint(std::initializer_list<Scalar> coords) : coords_(static_cast<Eigen::Index>(coords.size())) {
    std::copy(coords.begin(), coords.end(), coords_.data());
    validate();
  }

  // (0, ..., 0, height)
  static HPoint on_axis(int dim, Scalar height = Scalar(1)) {
    VectorType v = VectorType::Zero(dim);
    v[dim - 1] = height;
    return HPoint(std::move(v));
  }

  int dim() const { return static_cast<int>(coords_.size()); }
  Scalar height() const { return coords_[dim() - 1]; }
  auto horizontal() const { return coords_.head(dim() - 1); }
  const VectorType& coords() const { return coords_; }
  Scalar operator[](int i) const { return coords_[i]; }

  bool operator==(const HPoint& other) const { return coords_ == other.coords_; }

 private:
  void validate() const {
    detail::require(coords_.size() >= 2 && coords_.size() <= kMaxDim,
                    "HPoint: dimension must lie in [2, 8]");
    detail::require(coords_.allFinite(), "HPoint: non-finite coordinate");
    detail::require(coords_[coords_.size() - 1] > Scalar(0), "HPoint: last coordinate must be positive");
  }

  VectorType coords_;
};

namespace detail {

template <typename Scalar>
void check_pair(const HPoint<Scalar>& p, const HPoint<Scalar>& q, Scalar c) {
  hypbridge::detail::require(p.dim() == q.dim(), "dimension mismatch between points");
  hypbridge::detail::require(c > Scalar(0), "curvature scale c must be positive");
}

// Distance for the unit-curvature metric, accurate for nearby points:
// sinh(rho/2) = |p - q| / (2 sqrt(p_d q_d)).
template <typename Scalar>
Scalar unit_distance(const Vector<Scalar>& p, const Vector<Scalar>& q) {
  using std::asinh;
  using std::sqrt;
  const int d = static_cast<int>(p.size());
  return Scalar(2) * asinh((p - q).norm() / (Scalar(2) * sqrt(p[d - 1] * q[d - 1])));
}

// Unit-curvature geodesic from p with unit initial direction u, evaluated at
// arclength len. The closed form is
//   y(len) = p_d / (cosh len - u_d sinh len),
//   x(len) = p_x + p_d u_x sinh len / (cosh len - u_d sinh len),
// with the denominator rewritten as a sum of nonnegative terms.
template <typename Scalar>
Vector<Scalar> unit_geodesic(const Vector<Scalar>& p, const Vector<Scalar>& u, Scalar len) {
  using std::exp;
  const int d = static_cast<int>(p.size());
  if (len == Scalar(0)) return p;
  const Scalar ud = u[d - 1];
  const Scalar horiz2 = u.head(d - 1).squaredNorm();
  // 1 - u_d without cancellation when u is nearly vertical.
  const Scalar one_minus = ud > Scalar(0) ? horiz2 / (Scalar(1) + ud) : Scalar(1) - ud;
  const Scalar ep = exp(len);
  const Scalar em = Scalar(1) / ep;
  const Scalar denom = Scalar(0.5) * (ep * one_minus + em * (Scalar(1) + ud));
  const Scalar sh = Scalar(0.5) * (ep - em);
  Vector<Scalar> out(d);
  out.head(d - 1) = p.head(d - 1) + (p[d - 1] * sh / denom) * u.head(d - 1);
  out[d - 1] = p[d - 1] / denom;
  return out;
}

// Unit direction at p of the unit-curvature geodesic towards q, together with
// the unit-curvature distance. Returns a zero direction when p == q.
template <typename Scalar>
std::pair<Vector<Scalar>, Scalar> unit_direction(const Vector<Scalar>& p, const Vector<Scalar>& q) {
  using std::sinh;
  const int d = static_cast<int>(p.size());
  const Scalar rho = unit_distance(p, q);
  Vector<Scalar> u = Vector<Scalar>::Zero(d);
  if (rho == Scalar(0)) return {u, rho};
  const Scalar py = p[d - 1];
  const Scalar qy = q[d - 1];
  const Scalar sh = sinh(rho);
  const auto dx = (q.head(d - 1) - p.head(d - 1)).eval();
  u.head(d - 1) = dx / (qy * sh);
  u[d - 1] = (dx.squaredNorm() + (qy - py) * (qy + py)) / (Scalar(2) * py * qy * sh);
  u /= u.norm();
  return {u, rho};
}

}  // namespace detail

// Riemannian distance for curvature -c^2.
template <typename Scalar>
Scalar distance(const HPoint<Scalar>& p, const HPoint<Scalar>& q, Scalar c = Scalar(1)) {
  detail::check_pair(p, q, c);
  return detail::unit_distance(p.coords(), q.coords()) / c;
}

template <typename Scalar>
HPoint<Scalar> exp_map(const HPoint<Scalar>& p, const Vector<Scalar>& v, Scalar c = Scalar(1)) {
  hypbridge::detail::require(v.size() == p.dim(), "exp_map: tangent vector has wrong dimension");
  hypbridge::detail::require(v.allFinite(), "exp_map: tangent vector must be finite");
  hypbridge::detail::require(c > Scalar(0), "curvature scale c must be positive");
  const Scalar len = v.norm();
  if (len == Scalar(0)) return p;
  return HPoint<Scalar>(detail::unit_geodesic<Scalar>(p.coords(), v / len, c * len));
}

// Inverse of exp_map: |log_map(p, q)| == distance(p, q). Zero when p == q.
template <typename Scalar>
Vector<Scalar> log_map(const HPoint<Scalar>& p, const HPoint<Scalar>& q, Scalar c = Scalar(1)) {
  detail::check_pair(p, q, c);
  auto [u, rho] = detail::unit_direction(p.coords(), q.coords());
  return u * (rho / c);
}

// Coordinate velocity of a frame-expressed tangent vector.
template <typename Scalar>
Vector<Scalar> frame_to_coordinates(const HPoint<Scalar>& p, const Vector<Scalar>& v, Scalar c = Scalar(1)) {
  return v * (c * p.height());
}

// Isometry of the half-space built from at most two sphere inversions centred
// on the boundary, followed by a horizontal translation and a dilation:
//   z -> scale * (inv_k(...inv_1(z)) - shift).
// Inversions act on orthonormal frames as reflections, translations and
// dilations act trivially, so tangent vectors are pushed exactly.
template <typename Scalar>
class HalfSpaceIsometry {
 public:
  using VectorType = Vector<Scalar>;

  static HalfSpaceIsometry identity(int dim) {
    HalfSpaceIsometry iso;
    iso.dim_ = dim;
    iso.shift_ = VectorType::Zero(dim - 1);
    return iso;
  }

  // Isometry sending `origin` to (0, ..., 0, 1) and the geodesic through
  // origin with unit direction `dir` onto the z_d-axis, oriented upward.
  static HalfSpaceIsometry normalizing(const HPoint<Scalar>& origin, const VectorType& dir) {
    const int d = origin.dim();
    hypbridge::detail::require(dir.size() == d, "normalizing: direction has wrong dimension");
    const Scalar norm = dir.norm();
    hypbridge::detail::require(norm > Scalar(0) && std::isfinite(norm), "normalizing: direction must be nonzero");
    const VectorType u = dir / norm;
    const Scalar ud = u[d - 1];
    const auto ux = u.head(d - 1);
    const auto x0 = origin.horizontal();
    const Scalar y0 = origin.height();

    HalfSpaceIsometry iso = identity(d);
    if (ux.squaredNorm() > Scalar(0)) {
      if (ud <= Scalar(0)) {
        // Forward ideal endpoint is close by: send it to infinity.
        iso.add_inversion(x0 + (y0 / (Scalar(1) - ud)) * ux);
      } else {
        // Send the backward endpoint to infinity (the line now points down),
        // then invert at the foot of the resulting vertical line.
        iso.add_inversion(x0 - (y0 / (Scalar(1) + ud)) * ux);
        const VectorType moved = iso.apply_inversions(origin.coords());
        iso.add_inversion(moved.head(d - 1));
      }
    } else if (ud < Scalar(0)) {
      iso.add_inversion(VectorType(x0));
    }
    const VectorType moved = iso.apply_inversions(origin.coords());
    iso.shift_ = moved.head(d - 1);
    iso.scale_ = Scalar(1) / moved[d - 1];
    return iso;
  }

  int dim() const { return dim_; }

  HPoint<Scalar> apply(const HPoint<Scalar>& z) const { return HPoint<Scalar>(apply(z.coords())); }
  HPoint<Scalar> inverse(const HPoint<Scalar>& z) const { return HPoint<Scalar>(inverse(z.coords())); }

  VectorType apply(const VectorType& z) const {
    VectorType w = apply_inversions(z);
    w.head(dim_ - 1) -= shift_;
    return w * scale_;
  }

  VectorType inverse(const VectorType& z) const {
    VectorType w = z / scale_;
    w.head(dim_ - 1) += shift_;
    for (int k = n_inv_ - 1; k >= 0; --k) w = invert(w, centers_[k]);
    return w;
  }

  // Frame components of the differential at z (original coordinates).
  VectorType push_tangent(const VectorType& z, VectorType v) const {
    VectorType w = z;
    for (int k = 0; k < n_inv_; ++k) {
      v = reflect(w, centers_[k], v);
      w = invert(w, centers_[k]);
    }
    return v;
  }

  // Inverse differential: v is given in the frame at apply(z).
  VectorType pull_tangent(const VectorType& z, VectorType v) const {
    std::array<VectorType, 3> chain;
    chain[0] = z;
    for (int k = 0; k < n_inv_; ++k) chain[k + 1] = invert(chain[k], centers_[k]);
    for (int k = n_inv_ - 1; k >= 0; --k) v = reflect(chain[k], centers_[k], v);
    return v;
  }

 private:
  HalfSpaceIsometry() = default;

  void add_inversion(const VectorType& center) { centers_[n_inv_++] = center; }

  VectorType apply_inversions(const VectorType& z) const {
    VectorType w = z;
    for (int k = 0; k < n_inv_; ++k) w = invert(w, centers_[k]);
    return w;
  }

  // Unit-radius inversion in the sphere centred at the boundary point `center`.
  static VectorType invert(const VectorType& z, const VectorType& center) {
    const int d = static_cast<int>(z.size());
    VectorType w = z;
    w.head(d - 1) -= center;
    const Scalar r2 = w.squaredNorm();
    VectorType out = w / r2;
    out.head(d - 1) += center;
    return out;
  }

  static VectorType reflect(const VectorType& z, const VectorType& center, const VectorType& v) {
    const int d = static_cast<int>(z.size());
    VectorType w = z;
    w.head(d - 1) -= center;
    const Scalar r2 = w.squaredNorm();
    return v - (Scalar(2) * w.dot(v) / r2) * w;
  }

  int dim_ = 2;
  int n_inv_ = 0;
  std::array<VectorType, 2> centers_;
  VectorType shift_;
  Scalar scale_ = Scalar(1);
};

enum class GeodesicKind { line, segment };

// Oriented geodesic line, or a segment starting at its origin. Arclengths are
// stored for unit curvature; accessors taking c rescale them.
template <typename Scalar>
class GeodesicSpec {
 public:
  using VectorType = Vector<Scalar>;

  static GeodesicSpec line(const HPoint<Scalar>& origin, const VectorType& direction) {
    return GeodesicSpec(GeodesicKind::line, origin, direction, Scalar(0));
  }

  static GeodesicSpec line_through(const HPoint<Scalar>& p, const HPoint<Scalar>& q) {
    auto [u, rho] = detail::unit_direction(p.coords(), q.coords());
    hypbridge::detail::require(rho > Scalar(0), "geodesic endpoints must be distinct");
    return GeodesicSpec(GeodesicKind::line, p, u, Scalar(0));
  }

  static GeodesicSpec segment(const HPoint<Scalar>& p, const HPoint<Scalar>& q) {
    auto [u, rho] = detail::unit_direction(p.coords(), q.coords());
    hypbridge::detail::require(rho > Scalar(0), "segment endpoints must be distinct");
    return GeodesicSpec(GeodesicKind::segment, p, u, rho);
  }

  // The z_d-axis through (0, ..., 0, 1); a segment of unit-curvature length
  // `length` when length > 0.
  static GeodesicSpec axis(int dim, Scalar length = Scalar(0)) {
    const auto kind = length > Scalar(0) ? GeodesicKind::segment : GeodesicKind::line;
    return GeodesicSpec(kind, HPoint<Scalar>::on_axis(dim), unit_vector<Scalar>(dim, dim - 1), length);
  }

  GeodesicKind kind() const { return kind_; }
  int dim() const { return origin_.dim(); }
  const HPoint<Scalar>& origin() const { return origin_; }
  const VectorType& direction() const { return direction_; }
  Scalar length(Scalar c = Scalar(1)) const { return unit_length_ / c; }
  Scalar unit_length() const { return unit_length_; }
  const HalfSpaceIsometry<Scalar>& normalizer() const { return normalizer_; }

  // phi(u): the point at signed arclength u from the origin.
  HPoint<Scalar> point_at(Scalar u, Scalar c = Scalar(1)) const {
    using std::exp;
    return normalizer_.inverse(HPoint<Scalar>::on_axis(dim(), exp(c * u)));
  }

 private:
  GeodesicSpec(GeodesicKind kind, const HPoint<Scalar>& origin, const VectorType& direction, Scalar unit_length)
      : kind_(kind),
        origin_(origin),
        direction_(direction / direction.norm()),
        unit_length_(unit_length),
        normalizer_(HalfSpaceIsometry<Scalar>::normalizing(origin, direction)) {}

  GeodesicKind kind_;
  HPoint<Scalar> origin_;
  VectorType direction_;
  Scalar unit_length_;
  HalfSpaceIsometry<Scalar> normalizer_;
};

template <typename Scalar>
struct FermiCoords {
  Scalar u;                      // arclength of the foot point along the geodesic
  Scalar h;                      // distance to the geodesic line
  Vector<Scalar> theta;          // unit transverse direction in S^{d-2}
};

template <typename Scalar>
FermiCoords<Scalar> fermi(const HPoint<Scalar>& z, const GeodesicSpec<Scalar>& geo, Scalar c = Scalar(1)) {
  using std::asinh;
  using std::log;
  hypbridge::detail::require(z.dim() == geo.dim(), "fermi: dimension mismatch");
  hypbridge::detail::require(c > Scalar(0), "curvature scale c must be positive");
  const int d = z.dim();
  const Vector<Scalar> w = geo.normalizer().apply(z.coords());
  const Scalar r = w.head(d - 1).norm();
  FermiCoords<Scalar> out;
  out.u = log(w.norm()) / c;
  out.h = asinh(r / w[d - 1]) / c;
  // On the axis theta is undefined; e_1 is the canonical choice.
  out.theta = r > Scalar(0) ? Vector<Scalar>(w.head(d - 1) / r) : unit_vector<Scalar>(d - 1, 0);
  return out;
}

template <typename Scalar>
HPoint<Scalar> from_fermi(const FermiCoords<Scalar>& fc, const GeodesicSpec<Scalar>& geo, Scalar c = Scalar(1)) {
  using std::cosh;
  using std::exp;
  using std::tanh;
  const int d = geo.dim();
  hypbridge::detail::require(fc.theta.size() == d - 1, "from_fermi: theta has wrong dimension");
  const Scalar base = exp(c * fc.u);
  Vector<Scalar> w(d);
  w.head(d - 1) = (base * tanh(c * fc.h)) * fc.theta;
  w[d - 1] = base / cosh(c * fc.h);
  return HPoint<Scalar>(geo.normalizer().inverse(w));
}

template <typename Scalar>
struct GeodesicDistance {
  Scalar g;                      // rho(z, geodesic); f = g^2
  Vector<Scalar> grad_dir;       // unit direction of increasing g, frame at z
};

// Distance to a line or segment with the outward unit gradient. For segments
// the foot point is the clamped Fermi foot point (the distance to a geodesic
// is convex along the geodesic).
template <typename Scalar>
GeodesicDistance<Scalar> dist_to_geodesic(const HPoint<Scalar>& z, const GeodesicSpec<Scalar>& geo,
                                          Scalar c = Scalar(1)) {
  using std::asinh;
  using std::clamp;
  using std::exp;
  using std::log;
  hypbridge::detail::require(z.dim() == geo.dim(), "dist_to_geodesic: dimension mismatch");
  hypbridge::detail::require(c > Scalar(0), "curvature scale c must be positive");
  const int d = z.dim();
  const Vector<Scalar> w = geo.normalizer().apply(z.coords());
  Scalar foot_u = log(w.norm());
  if (geo.kind() == GeodesicKind::segment) foot_u = clamp(foot_u, Scalar(0), geo.unit_length());
  Vector<Scalar> foot = Vector<Scalar>::Zero(d);
  foot[d - 1] = exp(foot_u);

  GeodesicDistance<Scalar> out;
  auto [toward, rho] = detail::unit_direction<Scalar>(w, foot);
  out.g = rho / c;
  if (rho == Scalar(0)) {
    out.grad_dir = unit_vector<Scalar>(d, 0);
  } else {
    out.grad_dir = geo.normalizer().pull_tangent(z.coords(), Vector<Scalar>(-toward));
  }
  return out;
}

// Unit tangent at z of the geodesic ray from z to the forward ideal endpoint
// y(infinity) of `geo`.
template <typename Scalar>
Vector<Scalar> direction_to_forward_end(const HPoint<Scalar>& z, const GeodesicSpec<Scalar>& geo) {
  return geo.normalizer().pull_tangent(z.coords(), unit_vector<Scalar>(z.dim(), z.dim() - 1));
}

// Laplace-Beltrami operator of f = g^2 for a geodesic line:
//   Delta f = 2 + 2 g Delta g,  Delta g = c (tanh(c g) + (d - 2) coth(c g)),
// which is independent of c. On the line itself f is smooth and the value is
// the limit 2(d - 1), i.e. 2 for d = 2.
template <typename Scalar>
Scalar laplacian_f(const HPoint<Scalar>& z, const GeodesicSpec<Scalar>& geo, Scalar c = Scalar(1)) {
  using std::asinh;
  using std::tanh;
  hypbridge::detail::require(geo.kind() == GeodesicKind::line, "laplacian_f: geodesic must be a line");
  hypbridge::detail::require(z.dim() == geo.dim(), "laplacian_f: dimension mismatch");
  hypbridge::detail::require(c > Scalar(0), "curvature scale c must be positive");
  const int d = z.dim();
  const Vector<Scalar> w = geo.normalizer().apply(z.coords());
  const Scalar r = w.head(d - 1).norm();
  if (r == Scalar(0)) return Scalar(2 * (d - 1));
  const Scalar g1 = asinh(r / w[d - 1]);
  const Scalar th = tanh(g1);
  // g coth g stays finite as g -> 0
  const Scalar g_coth = g1 < Scalar(1e-4) ? Scalar(1) + g1 * g1 / Scalar(3) : g1 / th;
  return Scalar(2) + Scalar(2) * (g1 * th + Scalar(d - 2) * g_coth);
}

// ---------------------------------------------------------------------------
// Bidisk H^2 x H^2 with the product metric.

template <typename Scalar>
struct BidiskPoint {
  HPoint<Scalar> p1;
  HPoint<Scalar> p2;

  BidiskPoint(HPoint<Scalar> a, HPoint<Scalar> b) : p1(std::move(a)), p2(std::move(b)) {
    hypbridge::detail::require(p1.dim() == 2 && p2.dim() == 2, "BidiskPoint: components must be points of H^2");
  }
};

template <typename Scalar>
Scalar bidisk_distance(const BidiskPoint<Scalar>& u, const BidiskPoint<Scalar>& v) {
  using std::hypot;
  return hypot(distance(u.p1, v.p1), distance(u.p2, v.p2));
}

// Distance to the diagonal geodesic Lambda = {((0, e^t), (0, e^t))}. By the
// hyperbolic Pythagorean theorem rho((x, y), (0, e^t)) = acosh(cosh h cosh(t - tau))
// with (tau, h) the Fermi coordinates of (x, y) for the axis, so the squared
// distance is convex in t and is minimised between the two foot parameters.
template <typename Scalar>
Scalar bidisk_dist_to_diagonal(const BidiskPoint<Scalar>& u) {
  using std::acosh;
  using std::cosh;
  using std::hypot;
  using std::log;
  using std::sqrt;
  auto foot = [](const HPoint<Scalar>& p) {
    const Scalar R = hypot(p[0], p[1]);
    return std::pair<Scalar, Scalar>(log(R), R / p[1]);  // (tau, cosh h)
  };
  const auto [tau1, ch1] = foot(u.p1);
  const auto [tau2, ch2] = foot(u.p2);
  auto sq = [&](Scalar t) {
    const Scalar a = acosh(std::max(Scalar(1), ch1 * cosh(t - tau1)));
    const Scalar b = acosh(std::max(Scalar(1), ch2 * cosh(t - tau2)));
    return a * a + b * b;
  };
  const Scalar lo = std::min(tau1, tau2);
  const Scalar hi = std::max(tau1, tau2);
  if (hi - lo <= std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + std::abs(lo))) return sqrt(sq(lo));
  const int bits = std::numeric_limits<Scalar>::digits / 2 + 2;
  boost::uintmax_t max_iter = 200;
  const auto res = boost::math::tools::brent_find_minima(sq, lo, hi, bits, max_iter);
  return sqrt(std::min({res.second, sq(lo), sq(hi)}));
}

}  // namespace hypbridge::hypgeo
