#pragma once

#include <array>
#include <cmath>

namespace sphereflow {

// Second-order truncated Taylor expansion (2-jet) in DIM variables.
// Carries value, gradient and symmetric Hessian through arithmetic so that
// pointwise pipelines yield exact first and second coordinate partials of
// every intermediate quantity.  Used by the weight-field assembly, where
// the inputs' partials are known exactly (spectral derivatives of the graph
// function plus closed-form derivatives of the chart).
//
// Hessian packing: DIM=1 -> (11); DIM=2 -> (11, 12, 22).
template <int DIM>
struct Jet {
  static_assert(DIM == 1 || DIM == 2);
  static constexpr int kHess = DIM * (DIM + 1) / 2;

  double v = 0.0;
  std::array<double, DIM> d{};
  std::array<double, kHess> h{};

  Jet() = default;
  explicit Jet(double value) : v(value) {}

  static Jet constant(double value) { return Jet(value); }

  static Jet coordinate(double value, int axis) {
    Jet j(value);
    j.d[axis] = 1.0;
    return j;
  }

  static constexpr int hess_index(int i, int j) {
    if constexpr (DIM == 1) {
      return 0;
    } else {
      if (i > j) { int t = i; i = j; j = t; }
      return i == 0 ? j : 2;  // (0,0)->0 (0,1)->1 (1,1)->2
    }
  }

  double hess(int i, int j) const { return h[hess_index(i, j)]; }

  Jet operator-() const {
    Jet r;
    r.v = -v;
    for (int i = 0; i < DIM; ++i) r.d[i] = -d[i];
    for (int i = 0; i < kHess; ++i) r.h[i] = -h[i];
    return r;
  }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int i = 0; i < DIM; ++i) d[i] += o.d[i];
    for (int i = 0; i < kHess; ++i) h[i] += o.h[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    for (int i = 0; i < DIM; ++i) d[i] -= o.d[i];
    for (int i = 0; i < kHess; ++i) h[i] -= o.h[i];
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.v = a.v * b.v;
    for (int i = 0; i < DIM; ++i) r.d[i] = a.v * b.d[i] + a.d[i] * b.v;
    if constexpr (DIM == 1) {
      r.h[0] = a.v * b.h[0] + 2.0 * a.d[0] * b.d[0] + a.h[0] * b.v;
    } else {
      r.h[0] = a.v * b.h[0] + 2.0 * a.d[0] * b.d[0] + a.h[0] * b.v;
      r.h[1] = a.v * b.h[1] + a.d[0] * b.d[1] + a.d[1] * b.d[0] + a.h[1] * b.v;
      r.h[2] = a.v * b.h[2] + 2.0 * a.d[1] * b.d[1] + a.h[2] * b.v;
    }
    return r;
  }

  friend Jet operator*(double s, Jet a) {
    a.v *= s;
    for (int i = 0; i < DIM; ++i) a.d[i] *= s;
    for (int i = 0; i < Jet::kHess; ++i) a.h[i] *= s;
    return a;
  }
  friend Jet operator*(const Jet& a, double s) { return s * a; }
  friend Jet operator+(Jet a, double s) { a.v += s; return a; }
  friend Jet operator+(double s, Jet a) { a.v += s; return a; }
  friend Jet operator-(Jet a, double s) { a.v -= s; return a; }
  friend Jet operator-(double s, const Jet& a) { return (-a) + s; }

  // f(value), f'(value), f''(value) -> f(jet) by second-order chain rule.
  Jet compose(double f0, double f1, double f2) const {
    Jet r;
    r.v = f0;
    for (int i = 0; i < DIM; ++i) r.d[i] = f1 * d[i];
    if constexpr (DIM == 1) {
      r.h[0] = f1 * h[0] + f2 * d[0] * d[0];
    } else {
      r.h[0] = f1 * h[0] + f2 * d[0] * d[0];
      r.h[1] = f1 * h[1] + f2 * d[0] * d[1];
      r.h[2] = f1 * h[2] + f2 * d[1] * d[1];
    }
    return r;
  }

  friend Jet sin(const Jet& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return a.compose(s, c, -s);
  }
  friend Jet cos(const Jet& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return a.compose(c, -s, -c);
  }
  friend Jet sqrt(const Jet& a) {
    const double r = std::sqrt(a.v);
    return a.compose(r, 0.5 / r, -0.25 / (r * a.v));
  }
  // x^{-1/2}
  friend Jet rsqrt(const Jet& a) {
    const double r = 1.0 / std::sqrt(a.v);
    return a.compose(r, -0.5 * r / a.v, 0.75 * r / (a.v * a.v));
  }
  friend Jet recip(const Jet& a) {
    const double r = 1.0 / a.v;
    return a.compose(r, -r * r, 2.0 * r * r * r);
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * recip(b); }
  friend Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
};

// Plain doubles satisfy the same interface where the assembly code needs
// only values; these shims let the geometry pipeline be instantiated with
// Scalar = double for the fast path.
inline double value_of(double x) { return x; }
template <int DIM>
double value_of(const Jet<DIM>& j) { return j.v; }

inline double recip(double x) { return 1.0 / x; }
inline double rsqrt(double x) { return 1.0 / std::sqrt(x); }

}  // namespace sphereflow
