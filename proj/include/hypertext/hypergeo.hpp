#pragma once

// Hyperbolic geometry kernel: Poincare ball and Klein model point algebra,
// Mobius operations, Einstein midpoints, Riemannian gradient scaling and the
// ball retraction used by the optimizer.
//
// Two layers live here. `kernel::` works in place on spans and never
// allocates; the model's hot loop uses it directly. The typed layer below it
// (BallPoint, KleinPoint, ...) carries the ball invariant in the type and is
// what the rest of the world should call.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hypertext/error.hpp"

namespace hypertext::hypergeo {

// Points are kept at Euclidean norm <= kMaxNorm so that the conformal and
// Lorentz factors stay finite.
inline constexpr double kBallEps = 1e-5;
inline constexpr double kMaxNorm = 1.0 - kBallEps;

class Curvature {
 public:
  explicit Curvature(double c = 1.0) : c_(c), sqrt_c_(std::sqrt(c)) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ConfigError("curvature must be a positive finite number, got " + std::to_string(c));
    }
  }

  double value() const { return c_; }
  double sqrt() const { return sqrt_c_; }

  // Largest norm a Mobius-layer point may take: the clamp radius scaled to the
  // radius-1/sqrt(c) ball.
  double max_norm() const { return kMaxNorm / sqrt_c_; }

  friend bool operator==(const Curvature&, const Curvature&) = default;

 private:
  double c_;
  double sqrt_c_;
};

namespace kernel {

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

inline void scale(std::span<double> a, double s) {
  for (double& v : a) v *= s;
}

// Rescales v onto the sphere of radius max_norm if it lies outside.
// Returns true if the clamp was active.
inline bool project_to_ball(std::span<double> v, double max_norm = kMaxNorm) {
  const double n = norm(v);
  if (n <= max_norm) return false;
  scale(v, max_norm / n);
  // Rounding can leave the result an ulp outside; nudge it back in.
  while (norm(v) > max_norm) scale(v, 1.0 - 0x1p-52);
  return true;
}

inline double conformal_factor(std::span<const double> x) { return 2.0 / (1.0 - squared_norm(x)); }

inline double lorentz_factor(std::span<const double> k) { return 1.0 / std::sqrt(1.0 - squared_norm(k)); }

// 1 / lambda_x^2 for the curvature-c ball; c = 1 is the unit Poincare ball.
inline double riemannian_scale(std::span<const double> x, double c = 1.0) {
  const double half = (1.0 - c * squared_norm(x)) / 2.0;
  return half * half;
}

// out = 2p / (1 + |p|^2), clamped to the ball.
inline void poincare_to_klein(std::span<const double> p, std::span<double> out) {
  assert(p.size() == out.size());
  const double s = 2.0 / (1.0 + squared_norm(p));
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = s * p[i];
  project_to_ball(out);
}

// out = k / (1 + sqrt(1 - |k|^2)), clamped to the ball.
inline void klein_to_poincare(std::span<const double> k, std::span<double> out) {
  assert(k.size() == out.size());
  const double s = 1.0 / (1.0 + std::sqrt(1.0 - squared_norm(k)));
  for (std::size_t i = 0; i < k.size(); ++i) out[i] = s * k[i];
  project_to_ball(out);
}

// Lorentz-weighted average of `count` Klein points stored row-major in
// `points`. `gammas` receives each point's Lorentz factor.
inline void einstein_midpoint(std::span<const double> points, std::size_t dim, std::span<double> gammas,
                              std::span<double> out) {
  assert(dim > 0 && points.size() % dim == 0);
  const std::size_t count = points.size() / dim;
  assert(gammas.size() == count && out.size() == dim);
  if (count == 0) throw EmptyInput("einstein_midpoint of an empty point set");
  std::fill(out.begin(), out.end(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto row = points.subspan(i * dim, dim);
    const double g = lorentz_factor(row);
    gammas[i] = g;
    total += g;
    for (std::size_t j = 0; j < dim; ++j) out[j] += g * row[j];
  }
  scale(out, 1.0 / total);
  project_to_ball(out);
}

inline void mobius_add(std::span<const double> x, std::span<const double> b, const Curvature& c,
                       std::span<double> out) {
  assert(x.size() == b.size() && out.size() == x.size());
  const double cv = c.value();
  const double xb = dot(x, b);
  const double xx = squared_norm(x);
  const double bb = squared_norm(b);
  const double alpha = 1.0 + 2.0 * cv * xb + cv * bb;
  const double beta = 1.0 - cv * xx;
  const double denom = 1.0 + 2.0 * cv * xb + cv * cv * xx * bb;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (alpha * x[i] + beta * b[i]) / denom;
  project_to_ball(out, c.max_norm());
}

// out (n) = M (n x d, row-major) (x) x (d), the Mobius matrix-vector product.
// The formula is 0/0 at x = 0 and at Mx = 0; the result is 0 there.
inline void mobius_matvec(std::span<const double> m, std::span<const double> x, const Curvature& c,
                          std::span<double> out) {
  const std::size_t d = x.size();
  const std::size_t n = out.size();
  assert(m.size() == n * d);
  for (std::size_t r = 0; r < n; ++r) out[r] = dot(m.subspan(r * d, d), x);
  const double xn = norm(x);
  const double un = norm(out);
  if (xn == 0.0 || un == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double t = std::min(c.sqrt() * xn, kMaxNorm);
  const double s = un / xn * std::atanh(t);
  scale(out, std::tanh(s) / (c.sqrt() * un));
  project_to_ball(out, c.max_norm());
}

}  // namespace kernel

// A point of the open unit ball, norm <= kMaxNorm.
class BallPoint {
 public:
  BallPoint() = default;

  // Throws DimensionMismatch on an empty vector and std::domain_error when the
  // vector is not inside the clamped ball. Use project_to_ball to clamp.
  static BallPoint checked(std::vector<double> coords) {
    if (coords.empty()) throw DimensionMismatch("BallPoint needs dimension >= 1");
    if (kernel::norm(coords) > kMaxNorm) throw std::domain_error("point lies outside the Poincare ball");
    return BallPoint(std::move(coords));
  }

  static BallPoint origin(std::size_t dim) { return checked(std::vector<double>(dim, 0.0)); }

  std::span<const double> coords() const { return coords_; }
  const std::vector<double>& vec() const { return coords_; }
  std::size_t dim() const { return coords_.size(); }
  double norm() const { return kernel::norm(coords_); }
  double operator[](std::size_t i) const { return coords_[i]; }

  BallPoint operator-() const {
    auto v = coords_;
    for (double& x : v) x = -x;
    return BallPoint(std::move(v));
  }

 private:
  friend BallPoint project_to_ball(std::vector<double> v);
  friend class KleinPoint;
  explicit BallPoint(std::vector<double> coords) : coords_(std::move(coords)) {}

  std::vector<double> coords_;
};

// The same ball, read through the Klein model. Same norm bound.
class KleinPoint {
 public:
  KleinPoint() = default;

  static KleinPoint checked(std::vector<double> coords) {
    if (coords.empty()) throw DimensionMismatch("KleinPoint needs dimension >= 1");
    if (kernel::norm(coords) > kMaxNorm) throw std::domain_error("point lies outside the Klein ball");
    return KleinPoint(std::move(coords));
  }

  std::span<const double> coords() const { return coords_; }
  const std::vector<double>& vec() const { return coords_; }
  std::size_t dim() const { return coords_.size(); }
  double norm() const { return kernel::norm(coords_); }
  double operator[](std::size_t i) const { return coords_[i]; }

  KleinPoint operator-() const {
    auto v = coords_;
    for (double& x : v) x = -x;
    return KleinPoint(std::move(v));
  }

 private:
  friend KleinPoint poincare_to_klein(const BallPoint& p);
  friend KleinPoint einstein_midpoint(std::span<const KleinPoint> points);
  explicit KleinPoint(std::vector<double> coords) : coords_(std::move(coords)) {}

  std::vector<double> coords_;
};

// A gradient attached to some base point; Euclidean or Riemannian depending
// on which operation produced it.
struct TangentGrad {
  std::vector<double> coords;

  std::size_t dim() const { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }
};

inline BallPoint project_to_ball(std::vector<double> v) {
  if (v.empty()) throw DimensionMismatch("cannot project an empty vector");
  kernel::project_to_ball(v);
  return BallPoint(std::move(v));
}

inline double conformal_factor(const BallPoint& x) { return kernel::conformal_factor(x.coords()); }

// Inverse-metric rescaling: grad_R = grad_E / lambda_x^2.
inline TangentGrad riemannian_grad(const BallPoint& x, const TangentGrad& g_euclid) {
  if (x.dim() != g_euclid.dim()) throw DimensionMismatch("gradient and base point differ in dimension");
  TangentGrad out{g_euclid.coords};
  kernel::scale(out.coords, kernel::riemannian_scale(x.coords()));
  return out;
}

inline KleinPoint poincare_to_klein(const BallPoint& p) {
  std::vector<double> out(p.dim());
  kernel::poincare_to_klein(p.coords(), out);
  return KleinPoint(std::move(out));
}

inline BallPoint klein_to_poincare(const KleinPoint& k) {
  std::vector<double> out(k.dim());
  kernel::klein_to_poincare(k.coords(), out);
  return BallPoint::checked(std::move(out));
}

inline double lorentz_factor(const KleinPoint& k) { return kernel::lorentz_factor(k.coords()); }

inline KleinPoint einstein_midpoint(std::span<const KleinPoint> points) {
  if (points.empty()) throw EmptyInput("einstein_midpoint of an empty point set");
  const std::size_t d = points.front().dim();
  std::vector<double> flat;
  flat.reserve(points.size() * d);
  for (const auto& p : points) {
    if (p.dim() != d) throw DimensionMismatch("einstein_midpoint inputs differ in dimension");
    flat.insert(flat.end(), p.vec().begin(), p.vec().end());
  }
  std::vector<double> gammas(points.size());
  std::vector<double> out(d);
  kernel::einstein_midpoint(flat, d, gammas, out);
  return KleinPoint(std::move(out));
}

inline BallPoint mobius_add(const BallPoint& x, const BallPoint& b, const Curvature& c = Curvature{}) {
  if (x.dim() != b.dim()) throw DimensionMismatch("mobius_add operands differ in dimension");
  std::vector<double> out(x.dim());
  kernel::mobius_add(x.coords(), b.coords(), c, out);
  return BallPoint::checked(std::move(out));
}

// `m` is rows x x.dim(), row-major.
inline BallPoint mobius_matvec(std::span<const double> m, std::size_t rows, const BallPoint& x,
                               const Curvature& c = Curvature{}) {
  if (rows == 0 || m.size() != rows * x.dim()) throw DimensionMismatch("mobius_matvec matrix shape mismatch");
  std::vector<double> out(rows);
  kernel::mobius_matvec(m, x.coords(), c, out);
  return BallPoint::checked(std::move(out));
}

// First-order retraction: step along -lr * grad, then clamp back into the ball.
inline BallPoint retract(const BallPoint& x, const TangentGrad& riem_grad, double lr) {
  if (x.dim() != riem_grad.dim()) throw DimensionMismatch("gradient and base point differ in dimension");
  std::vector<double> v = x.vec();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * riem_grad.coords[i];
  return project_to_ball(std::move(v));
}

}  // namespace hypertext::hypergeo
