#pragma once

// Discretization of the parameter sphere S^n (n = 1, 2): quadrature nodes,
// pseudo-spectral derivatives (Fourier / spherical-harmonic), deterministic
// integration, first-order harmonics, and covariant tensor calculus for a
// supplied metric.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "sphereflow/errors.hpp"
#include "sphereflow/util.hpp"

namespace sphereflow {

using ScalarField = std::vector<double>;

// Per-node components in the coordinate frame d/dp_i.  Stored dense
// (dim or dim^2 doubles per node) without symmetry assumptions.
struct CovectorField {
  int dim = 0;
  std::vector<double> a;
  CovectorField() = default;
  CovectorField(int d, int nodes) : dim(d), a(size_t(d) * nodes, 0.0) {}
  double& at(int node, int i) { return a[size_t(node) * dim + i]; }
  double at(int node, int i) const { return a[size_t(node) * dim + i]; }
  int nodes() const { return dim ? int(a.size() / dim) : 0; }
};

struct TensorField {  // generic 2-index field, first index i, second j
  int dim = 0;
  std::vector<double> a;
  TensorField() = default;
  TensorField(int d, int nodes) : dim(d), a(size_t(d) * d * nodes, 0.0) {}
  double& at(int node, int i, int j) { return a[(size_t(node) * dim + i) * dim + j]; }
  double at(int node, int i, int j) const { return a[(size_t(node) * dim + i) * dim + j]; }
  int nodes() const { return dim ? int(a.size() / (size_t(dim) * dim)) : 0; }
};

using Tensor02Field = TensorField;  // g_ij-type
using Tensor11Field = TensorField;  // T^i_j-type, at(node, i, j) = T^i_j

struct Derivatives {
  CovectorField first;   // d_i f
  Tensor02Field second;  // d_i d_j f
};

namespace detail {

// Univariate 4-jet on Taylor coefficients; used to carry theta-derivatives
// through the Legendre recurrences.
struct TJet {
  std::array<double, 5> c{};
  static TJet constant(double v) {
    TJet j;
    j.c[0] = v;
    return j;
  }
  friend TJet operator*(const TJet& a, const TJet& b) {
    TJet r;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; i + j < 5; ++j) r.c[i + j] += a.c[i] * b.c[j];
    return r;
  }
  friend TJet operator*(double s, TJet a) {
    for (auto& x : a.c) x *= s;
    return a;
  }
  friend TJet operator+(TJet a, const TJet& b) {
    for (int i = 0; i < 5; ++i) a.c[i] += b.c[i];
    return a;
  }
  friend TJet operator-(TJet a, const TJet& b) {
    for (int i = 0; i < 5; ++i) a.c[i] -= b.c[i];
    return a;
  }
  double deriv(int d) const {
    static const double fact[5] = {1, 1, 2, 6, 24};
    return c[d] * fact[d];
  }
};

inline TJet sin_jet(double t) {
  TJet j;
  const double s = std::sin(t), c = std::cos(t);
  j.c = {s, c, -s / 2.0, -c / 6.0, s / 24.0};
  return j;
}
inline TJet cos_jet(double t) {
  TJet j;
  const double s = std::sin(t), c = std::cos(t);
  j.c = {c, -s, -c / 2.0, s / 6.0, c / 24.0};
  return j;
}

// Gauss-Legendre nodes (descending x) and weights on [-1, 1].
inline void gauss_legendre(int L, std::vector<double>& x, std::vector<double>& w) {
  x.resize(L);
  w.resize(L);
  for (int i = 1; i <= L; ++i) {
    double xi = std::cos(kPi * (i - 0.25) / (L + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = xi;
      for (int l = 2; l <= L; ++l) {
        const double p2 = ((2 * l - 1) * xi * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      dp = L * (xi * p1 - p0) / (xi * xi - 1.0);
      const double dx = p1 / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    x[i - 1] = xi;
    w[i - 1] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
}

}  // namespace detail

// Immutable discretization of S^n.  n = 1: N equally spaced nodes on
// [0, 2pi).  n = 2: L Gauss-Legendre colatitudes x 2L uniform longitudes.
// Node weights integrate against the unit-S^n measure (sum = |S^n|).
class SphereGrid {
 public:
  static SphereGrid build(int n, int resolution) { return SphereGrid(n, resolution); }

  int dim() const { return n_; }
  int resolution() const { return res_; }
  int node_count() const { return nodes_; }
  int band() const { return band_; }          // transform band limit
  int filter_band() const { return fband_; }  // retained band for nonlinear work

  // coordinates: axis 0 = p_1, axis 1 = p_2 (n = 2 only)
  double coord(int node, int axis) const {
    if (n_ == 1) return p1_[node];
    return axis == 0 ? p1_[node % nlon_] : p2_[node / nlon_];
  }
  double weight(int node) const { return weight_[node]; }
  double area() const { return n_ == 1 ? 2.0 * kPi : 4.0 * kPi; }
  // sqrt(det g_{S^n}) at a node: coordinate measure -> unit-sphere measure
  double coord_density(int node) const { return n_ == 1 ? 1.0 : std::sin(p2_[node / nlon_]); }

  // --- spectral transforms -------------------------------------------------

  int mode_count(int b) const { return n_ == 1 ? 2 * b + 1 : (b + 1) * (b + 1); }

  // -l(l+n-1) for the mode's degree
  double mode_laplacian_eigenvalue(int mode, int b) const {
    const int l = mode_degree(mode, b);
    return -double(l) * (l + n_ - 1);
  }

  int mode_degree(int mode, int /*b*/) const {
    if (n_ == 1) return mode == 0 ? 0 : (mode + 1) / 2;
    return int(std::floor(std::sqrt(double(mode)) + 1e-12));
  }

  // Orthonormal-basis coefficients up to degree `b` (default: full band).
  std::vector<double> analyze(const ScalarField& f, int b = -1) const {
    check_field(f);
    if (b < 0) b = band_;
    return n_ == 1 ? analyze1(f, b) : analyze2(f, b);
  }

  // Field of d^{dp1}/dp1 d^{dp2}/dp2 applied to the band-limited synthesis.
  ScalarField synthesize(const std::vector<double>& c, int b = -1, int dp1 = 0, int dp2 = 0) const {
    if (b < 0) b = band_;
    if (int(c.size()) != mode_count(b)) throw ConfigError("synthesize: coefficient count mismatch");
    return n_ == 1 ? synth1(c, b, dp1 + dp2) : synth2(c, b, dp1, dp2);
  }

  ScalarField mode_field(int mode, int b) const {
    std::vector<double> c(mode_count(b), 0.0);
    c[mode] = 1.0;
    return synthesize(c, b);
  }

  // Projection onto the retained nonlinear band.
  ScalarField filter(const ScalarField& f) const {
    return synthesize(analyze(f, fband_), fband_);
  }

  ScalarField laplacian_sphere(const ScalarField& f) const {
    auto c = analyze(f);
    for (size_t m = 0; m < c.size(); ++m) c[m] *= mode_laplacian_eigenvalue(int(m), band_);
    return synthesize(c);
  }

  // --- calculus -------------------------------------------------------------

  Derivatives partial_derivatives(const ScalarField& f) const {
    Derivatives d;
    d.first = CovectorField(n_, nodes_);
    d.second = Tensor02Field(n_, nodes_);
    const auto c = analyze(f);
    if (n_ == 1) {
      auto d1 = synthesize(c, band_, 1, 0);
      auto d2 = synthesize(c, band_, 2, 0);
      for (int i = 0; i < nodes_; ++i) {
        d.first.at(i, 0) = d1[i];
        d.second.at(i, 0, 0) = d2[i];
      }
    } else {
      auto f1 = synthesize(c, band_, 1, 0);
      auto f2 = synthesize(c, band_, 0, 1);
      auto f11 = synthesize(c, band_, 2, 0);
      auto f12 = synthesize(c, band_, 1, 1);
      auto f22 = synthesize(c, band_, 0, 2);
      for (int i = 0; i < nodes_; ++i) {
        d.first.at(i, 0) = f1[i];
        d.first.at(i, 1) = f2[i];
        d.second.at(i, 0, 0) = f11[i];
        d.second.at(i, 0, 1) = f12[i];
        d.second.at(i, 1, 0) = f12[i];
        d.second.at(i, 1, 1) = f22[i];
      }
    }
    return d;
  }

  // All partials d^{(a,b)} f with a+b <= order (order <= 4), synthesized from
  // f's own coefficients; exact for band-limited f.  Index via uderiv_index.
  std::vector<ScalarField> u_derivatives(const ScalarField& f, int order) const {
    const auto c = analyze(f);
    std::vector<ScalarField> out;
    if (n_ == 1) {
      for (int a = 0; a <= order; ++a) out.push_back(synthesize(c, band_, a, 0));
    } else {
      for (int t = 0; t <= order; ++t)
        for (int a = t; a >= 0; --a) out.push_back(synthesize(c, band_, a, t - a));
    }
    return out;
  }
  // ordering: n=1: index = a.  n=2: blocks of total degree t, within a block
  // (a,b) with a descending: (0,0) (1,0) (0,1) (2,0) (1,1) (0,2) ...
  int uderiv_index(int a, int b) const {
    if (n_ == 1) return a;
    const int t = a + b;
    return t * (t + 1) / 2 + (t - a);
  }

  double integrate(const ScalarField& f, const ScalarField& density) const {
    check_field(f);
    check_field(density);
    CompensatedSum s;
    for (int i = 0; i < nodes_; ++i) s.add(weight_[i] * f[i] * density[i]);
    return s.value();
  }

  double inner(const ScalarField& f, const ScalarField& g) const {
    CompensatedSum s;
    for (int i = 0; i < nodes_; ++i) s.add(weight_[i] * f[i] * g[i]);
    return s.value();
  }

  double max_abs(const ScalarField& f) const {
    double m = 0.0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
  }

  // First-order spherical harmonics Y_1..Y_{n+1} in the convention
  // Y_i(p) = cos(p_{i-1}) prod_{j=i}^{n} sin(p_j), cos(p_0) := 1.
  std::vector<ScalarField> harmonics_first_order() const {
    std::vector<ScalarField> ys;
    for (int i = 1; i <= n_ + 1; ++i) {
      ScalarField y(nodes_);
      for (int node = 0; node < nodes_; ++node) {
        double v = i == 1 ? 1.0 : std::cos(coord(node, i - 2));
        for (int j = i; j <= n_; ++j) v *= std::sin(coord(node, j - 1));
        y[node] = v;
      }
      ys.push_back(std::move(y));
    }
    return ys;
  }

  // --- covariant calculus for a supplied metric ------------------------------

  // Christoffel symbols Gamma^k_{ij} of `metric`, plus their first partials,
  // from spectral derivatives of the metric components.  Layout:
  // gamma.at(node, k, i*dim+j) is not used; we return flat arrays instead.
  struct Christoffels {
    int dim = 0;
    std::vector<double> g;       // [node][k][i][j]
    std::vector<double> dg;      // [node][l][k][i][j]  (d_l Gamma^k_ij)
    double& at(int node, int k, int i, int j) {
      return g[((size_t(node) * dim + k) * dim + i) * dim + j];
    }
    double at(int node, int k, int i, int j) const {
      return g[((size_t(node) * dim + k) * dim + i) * dim + j];
    }
    double& d_at(int node, int l, int k, int i, int j) {
      return dg[(((size_t(node) * dim + l) * dim + k) * dim + i) * dim + j];
    }
    double d_at(int node, int l, int k, int i, int j) const {
      return dg[(((size_t(node) * dim + l) * dim + k) * dim + i) * dim + j];
    }
  };

  Christoffels christoffels(const Tensor02Field& metric, bool with_derivs = false) const;

  // Hessian of a scalar: nabla_i nabla_j f.
  Tensor02Field covariant_hessian(const ScalarField& f, const Tensor02Field& metric) const;

  // B_{ki} = nabla_j nabla_k T^j_i for a (1,1) tensor field, contracted on the
  // outer derivative as the weight formula requires.
  Tensor02Field covariant_second_derivative(const Tensor11Field& T,
                                            const Tensor02Field& metric) const;

 private:
  SphereGrid(int n, int resolution) : n_(n), res_(resolution) {
    if (n != 1 && n != 2) throw ConfigError("grid: only n in {1, 2} is supported");
    if (resolution < 8) throw ConfigError("grid: resolution must be at least 8");
    if (n == 1) {
      nodes_ = resolution;
      band_ = (resolution - 1) / 2;
      if (resolution % 2 == 0) band_ = resolution / 2 - 1;
      fband_ = resolution / 3;
      p1_.resize(nodes_);
      weight_.assign(nodes_, 2.0 * kPi / nodes_);
      for (int i = 0; i < nodes_; ++i) p1_[i] = 2.0 * kPi * i / nodes_;
      const int modes = mode_count(band_);
      tcos_.resize(size_t(band_ + 1) * nodes_);
      tsin_.resize(size_t(band_ + 1) * nodes_);
      for (int k = 0; k <= band_; ++k)
        for (int i = 0; i < nodes_; ++i) {
          tcos_[size_t(k) * nodes_ + i] = std::cos(k * p1_[i]);
          tsin_[size_t(k) * nodes_ + i] = std::sin(k * p1_[i]);
        }
      (void)modes;
    } else {
      nlat_ = resolution;
      nlon_ = 2 * resolution;
      nodes_ = nlat_ * nlon_;
      band_ = resolution / 2;
      fband_ = 2 * band_ / 3;
      detail::gauss_legendre(nlat_, lat_x_, lat_w_);
      p2_.resize(nlat_);
      for (int j = 0; j < nlat_; ++j) p2_[j] = std::acos(lat_x_[j]);
      p1_.resize(nlon_);
      for (int k = 0; k < nlon_; ++k) p1_[k] = 2.0 * kPi * k / nlon_;
      weight_.resize(nodes_);
      for (int j = 0; j < nlat_; ++j)
        for (int k = 0; k < nlon_; ++k) weight_[j * nlon_ + k] = lat_w_[j] * 2.0 * kPi / nlon_;
      build_legendre_tables();
      tcos_.resize(size_t(band_ + 1) * nlon_);
      tsin_.resize(size_t(band_ + 1) * nlon_);
      for (int m = 0; m <= band_; ++m)
        for (int k = 0; k < nlon_; ++k) {
          tcos_[size_t(m) * nlon_ + k] = std::cos(m * p1_[k]);
          tsin_[size_t(m) * nlon_ + k] = std::sin(m * p1_[k]);
        }
    }
  }

  void check_field(const ScalarField& f) const {
    if (int(f.size()) != nodes_) throw ConfigError("field size does not match grid");
  }

  // fully normalized associated Legendre tables: ptab_[d][lm][j] holds
  // d^d/dtheta^d Ptilde_l^m at colatitude node j, int_{-1}^1 Ptilde^2 dx = 1.
  void build_legendre_tables() {
    const int lmax = band_;
    const int nlm = (lmax + 1) * (lmax + 2) / 2;
    for (int d = 0; d < 5; ++d) ptab_[d].assign(size_t(nlm) * nlat_, 0.0);
    for (int j = 0; j < nlat_; ++j) {
      const double theta = p2_[j];
      std::vector<detail::TJet> P(nlm);
      const detail::TJet X = detail::cos_jet(theta);
      const detail::TJet S = detail::sin_jet(theta);
      P[lm_index(0, 0)] = detail::TJet::constant(1.0 / std::sqrt(2.0));
      for (int m = 1; m <= lmax; ++m)
        P[lm_index(m, m)] =
            std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * (S * P[lm_index(m - 1, m - 1)]);
      for (int m = 0; m < lmax; ++m) {
        P[lm_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * (X * P[lm_index(m, m)]);
        for (int l = m + 2; l <= lmax; ++l) {
          const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
          const double b =
              std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * double(l - 1) * (l - 1) - 1.0));
          P[lm_index(l, m)] = a * (X * P[lm_index(l - 1, m)] - b * P[lm_index(l - 2, m)]);
        }
      }
      for (int l = 0; l <= lmax; ++l)
        for (int m = 0; m <= l; ++m)
          for (int d = 0; d < 5; ++d)
            ptab_[d][size_t(lm_index(l, m)) * nlat_ + j] = P[lm_index(l, m)].deriv(d);
    }
  }

  static int lm_index(int l, int m) { return l * (l + 1) / 2 + m; }

  // n = 2 mode packing inside degree l: m=0 cos; then (cos, sin) pairs.
  // mode = l^2 (m=0), l^2 + 2m - 1 (cos), l^2 + 2m (sin).

  std::vector<double> analyze1(const ScalarField& f, int b) const {
    std::vector<double> c(mode_count(b), 0.0);
    const double w = 2.0 * kPi / nodes_;
    const double n0 = 1.0 / std::sqrt(2.0 * kPi);
    const double n1 = 1.0 / std::sqrt(kPi);
    {
      CompensatedSum s;
      for (int i = 0; i < nodes_; ++i) s.add(f[i]);
      c[0] = w * n0 * s.value();
    }
    for (int k = 1; k <= b; ++k) {
      CompensatedSum sc, ss;
      const double* tc = &tcos_[size_t(k) * nodes_];
      const double* ts = &tsin_[size_t(k) * nodes_];
      for (int i = 0; i < nodes_; ++i) {
        sc.add(f[i] * tc[i]);
        ss.add(f[i] * ts[i]);
      }
      c[2 * k - 1] = w * n1 * sc.value();
      c[2 * k] = w * n1 * ss.value();
    }
    return c;
  }

  ScalarField synth1(const std::vector<double>& c, int b, int d) const {
    ScalarField f(nodes_, 0.0);
    const double n0 = 1.0 / std::sqrt(2.0 * kPi);
    const double n1 = 1.0 / std::sqrt(kPi);
    if (d == 0)
      for (int i = 0; i < nodes_; ++i) f[i] = c[0] * n0;
    for (int k = 1; k <= b; ++k) {
      // d-th derivative of (cos, sin)(k p): phase rotation by d*pi/2
      const double kp = std::pow(double(k), d);
      double ac = c[2 * k - 1] * n1 * kp, as = c[2 * k] * n1 * kp;
      for (int r = 0; r < d % 4; ++r) {
        const double t = ac;
        ac = as;   // cos' = -sin, sin' = cos: rotate (ac, as) -> (as, -ac)
        as = -t;
      }
      const double* tc = &tcos_[size_t(k) * nodes_];
      const double* ts = &tsin_[size_t(k) * nodes_];
      for (int i = 0; i < nodes_; ++i) f[i] += ac * tc[i] + as * ts[i];
    }
    return f;
  }

  std::vector<double> analyze2(const ScalarField& f, int b) const {
    const int lmax = b;
    const double npi = 1.0 / std::sqrt(kPi);
    const double n2pi = 1.0 / std::sqrt(2.0 * kPi);
    // longitude stage
    std::vector<double> Ac(size_t(lmax + 1) * nlat_, 0.0), As(size_t(lmax + 1) * nlat_, 0.0);
    const double wlon = 2.0 * kPi / nlon_;
    for (int j = 0; j < nlat_; ++j) {
      const double* row = &f[size_t(j) * nlon_];
      for (int m = 0; m <= lmax; ++m) {
        CompensatedSum sc, ss;
        const double* tc = &tcos_[size_t(m) * nlon_];
        const double* ts = &tsin_[size_t(m) * nlon_];
        for (int k = 0; k < nlon_; ++k) {
          sc.add(row[k] * tc[k]);
          ss.add(row[k] * ts[k]);
        }
        Ac[size_t(m) * nlat_ + j] = wlon * sc.value();
        As[size_t(m) * nlat_ + j] = wlon * ss.value();
      }
    }
    // latitude stage
    std::vector<double> c(mode_count(b), 0.0);
    for (int l = 0; l <= lmax; ++l) {
      for (int m = 0; m <= l; ++m) {
        const double* P = &ptab_[0][size_t(lm_index(l, m)) * nlat_];
        CompensatedSum sc, ss;
        for (int j = 0; j < nlat_; ++j) {
          sc.add(lat_w_[j] * P[j] * Ac[size_t(m) * nlat_ + j]);
          if (m > 0) ss.add(lat_w_[j] * P[j] * As[size_t(m) * nlat_ + j]);
        }
        if (m == 0) {
          c[l * l] = n2pi * sc.value();
        } else {
          c[l * l + 2 * m - 1] = npi * sc.value();
          c[l * l + 2 * m] = npi * ss.value();
        }
      }
    }
    return c;
  }

  ScalarField synth2(const std::vector<double>& c, int b, int d1, int d2) const {
    const int lmax = b;
    const double npi = 1.0 / std::sqrt(kPi);
    const double n2pi = 1.0 / std::sqrt(2.0 * kPi);
    // latitude stage: B_m(j) per parity
    std::vector<double> Bc(size_t(lmax + 1) * nlat_, 0.0), Bs(size_t(lmax + 1) * nlat_, 0.0);
    for (int l = 0; l <= lmax; ++l)
      for (int m = 0; m <= l; ++m) {
        const double* P = &ptab_[d2][size_t(lm_index(l, m)) * nlat_];
        const double cc = m == 0 ? c[l * l] * n2pi : c[l * l + 2 * m - 1] * npi;
        const double cs = m == 0 ? 0.0 : c[l * l + 2 * m] * npi;
        if (cc != 0.0)
          for (int j = 0; j < nlat_; ++j) Bc[size_t(m) * nlat_ + j] += cc * P[j];
        if (cs != 0.0)
          for (int j = 0; j < nlat_; ++j) Bs[size_t(m) * nlat_ + j] += cs * P[j];
      }
    // longitude stage with d1-th derivative of the trig factor
    ScalarField f(nodes_, 0.0);
    parallel_for(nlat_, [&](int j) {
      double* row = &f[size_t(j) * nlon_];
      for (int m = 0; m <= lmax; ++m) {
        double bc = Bc[size_t(m) * nlat_ + j], bs = Bs[size_t(m) * nlat_ + j];
        if (bc == 0.0 && bs == 0.0) continue;
        const double mp = std::pow(double(m), d1);
        bc *= mp;
        bs *= mp;
        if (m == 0 && d1 > 0) continue;
        for (int r = 0; r < d1 % 4; ++r) {
          const double t = bc;
          bc = bs;
          bs = -t;
        }
        const double* tc = &tcos_[size_t(m) * nlon_];
        const double* ts = &tsin_[size_t(m) * nlon_];
        for (int k = 0; k < nlon_; ++k) row[k] += bc * tc[k] + bs * ts[k];
      }
    });
    return f;
  }

  int n_ = 0, res_ = 0, nodes_ = 0, band_ = 0, fband_ = 0;
  int nlat_ = 0, nlon_ = 0;
  std::vector<double> p1_, p2_, lat_x_, lat_w_, weight_;
  std::vector<double> tcos_, tsin_;
  std::array<std::vector<double>, 5> ptab_;
};

// ---------------------------------------------------------------------------
// Covariant calculus (generic spectral route)

inline SphereGrid::Christoffels SphereGrid::christoffels(const Tensor02Field& metric,
                                                         bool with_derivs) const {
  const int d = n_;
  if (metric.dim != d || metric.nodes() != nodes_)
    throw ConfigError("christoffels: metric does not match grid");
  // spectral partials of every metric component
  std::vector<Derivatives> dg(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      ScalarField comp(nodes_);
      for (int node = 0; node < nodes_; ++node) comp[node] = metric.at(node, i, j);
      dg[i * d + j] = partial_derivatives(comp);
    }
  Christoffels ch;
  ch.dim = d;
  ch.g.assign(size_t(nodes_) * d * d * d, 0.0);
  if (with_derivs) ch.dg.assign(size_t(nodes_) * d * d * d * d, 0.0);
  for (int node = 0; node < nodes_; ++node) {
    double gm[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) gm[i][j] = metric.at(node, i, j);
    double det = d == 1 ? gm[0][0] : gm[0][0] * gm[1][1] - gm[0][1] * gm[1][0];
    if (det < 1e-12) throw SingularMetricError("metric determinant below 1e-12");
    double gi[2][2] = {{0, 0}, {0, 0}};
    if (d == 1) {
      gi[0][0] = 1.0 / gm[0][0];
    } else {
      gi[0][0] = gm[1][1] / det;
      gi[1][1] = gm[0][0] / det;
      gi[0][1] = gi[1][0] = -gm[0][1] / det;
    }
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double acc = 0.0;
          for (int l = 0; l < d; ++l)
            acc += gi[k][l] * (dg[j * d + l].first.at(node, i) + dg[i * d + l].first.at(node, j) -
                               dg[i * d + j].first.at(node, l));
          ch.at(node, k, i, j) = 0.5 * acc;
        }
    if (with_derivs) {
      // d_m Gamma^k_ij = 1/2 [ d_m g^{kl} (..) + g^{kl} d_m (..) ],
      // with d_m g^{kl} = -g^{kp} g^{lq} d_m g_pq.
      for (int m = 0; m < d; ++m) {
        double dgi[2][2] = {{0, 0}, {0, 0}};
        for (int a = 0; a < d; ++a)
          for (int bb = 0; bb < d; ++bb) {
            double acc = 0.0;
            for (int p = 0; p < d; ++p)
              for (int q = 0; q < d; ++q)
                acc -= gi[a][p] * gi[bb][q] * dg[p * d + q].first.at(node, m);
            dgi[a][bb] = acc;
          }
        for (int k = 0; k < d; ++k)
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
              double acc = 0.0;
              for (int l = 0; l < d; ++l) {
                const double bracket = dg[j * d + l].first.at(node, i) +
                                       dg[i * d + l].first.at(node, j) -
                                       dg[i * d + j].first.at(node, l);
                const double dbracket = dg[j * d + l].second.at(node, m, i) +
                                        dg[i * d + l].second.at(node, m, j) -
                                        dg[i * d + j].second.at(node, m, l);
                acc += dgi[k][l] * bracket + gi[k][l] * dbracket;
              }
              ch.d_at(node, m, k, i, j) = 0.5 * acc;
            }
      }
    }
  }
  return ch;
}

inline Tensor02Field SphereGrid::covariant_hessian(const ScalarField& f,
                                                   const Tensor02Field& metric) const {
  const int d = n_;
  const auto ch = christoffels(metric, false);
  const auto df = partial_derivatives(f);
  Tensor02Field out(d, nodes_);
  for (int node = 0; node < nodes_; ++node)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double acc = df.second.at(node, i, j);
        for (int k = 0; k < d; ++k) acc -= ch.at(node, k, i, j) * df.first.at(node, k);
        out.at(node, i, j) = acc;
      }
  return out;
}

inline Tensor02Field SphereGrid::covariant_second_derivative(const Tensor11Field& T,
                                                             const Tensor02Field& metric) const {
  const int d = n_;
  if (T.dim != d || T.nodes() != nodes_) throw ConfigError("tensor does not match grid");
  const auto ch = christoffels(metric, false);
  // A^j_{ki} = nabla_k T^j_i
  std::vector<Derivatives> dT(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      ScalarField comp(nodes_);
      for (int node = 0; node < nodes_; ++node) comp[node] = T.at(node, j, i);
      dT[j * d + i] = partial_derivatives(comp);
    }
  // store A as fields for re-differentiation
  std::vector<ScalarField> A(d * d * d, ScalarField(nodes_));
  auto a_idx = [d](int j, int k, int i) { return (j * d + k) * d + i; };
  for (int node = 0; node < nodes_; ++node)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i) {
          double acc = dT[j * d + i].first.at(node, k);
          for (int m = 0; m < d; ++m)
            acc += ch.at(node, j, k, m) * T.at(node, m, i) -
                   ch.at(node, m, k, i) * T.at(node, j, m);
          A[a_idx(j, k, i)][node] = acc;
        }
  std::vector<Derivatives> dA(d * d * d);
  for (int t = 0; t < d * d * d; ++t) dA[t] = partial_derivatives(A[t]);
  // B_{ki} = nabla_j A^j_{ki}
  Tensor02Field B(d, nodes_);
  for (int node = 0; node < nodes_; ++node)
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) {
          acc += dA[a_idx(j, k, i)].first.at(node, j);
          for (int m = 0; m < d; ++m)
            acc += ch.at(node, j, j, m) * A[a_idx(m, k, i)][node] -
                   ch.at(node, m, j, k) * A[a_idx(j, m, i)][node] -
                   ch.at(node, m, j, i) * A[a_idx(j, k, m)][node];
        }
        B.at(node, k, i) = acc;
      }
  return B;
}

// ---------------------------------------------------------------------------
// Orthogonal projection onto the span of given fields in the quadrature
// inner product.  Used for the nullspace projection P onto
// span{1, Y_1, ..., Y_{n+1}}.
class SpanProjector {
 public:
  SpanProjector(const SphereGrid& grid, std::vector<ScalarField> basis) : grid_(&grid) {
    // Gram-Schmidt in the quadrature inner product
    for (auto& b : basis) {
      ScalarField v = b;
      for (const auto& q : ortho_) {
        const double c = grid.inner(v, q);
        for (size_t i = 0; i < v.size(); ++i) v[i] -= c * q[i];
      }
      const double nrm = std::sqrt(grid.inner(v, v));
      if (nrm < 1e-12) continue;
      for (auto& x : v) x /= nrm;
      ortho_.push_back(std::move(v));
    }
  }

  static SpanProjector sphere_tangent(const SphereGrid& grid) {
    std::vector<ScalarField> basis;
    basis.emplace_back(grid.node_count(), 1.0);
    for (auto& y : grid.harmonics_first_order()) basis.push_back(std::move(y));
    return SpanProjector(grid, std::move(basis));
  }

  int rank() const { return int(ortho_.size()); }
  const std::vector<ScalarField>& basis() const { return ortho_; }

  ScalarField project(const ScalarField& f) const {
    ScalarField out(f.size(), 0.0);
    for (const auto& q : ortho_) {
      const double c = grid_->inner(f, q);
      for (size_t i = 0; i < f.size(); ++i) out[i] += c * q[i];
    }
    return out;
  }

  ScalarField complement(const ScalarField& f) const {
    ScalarField out = f;
    for (const auto& q : ortho_) {
      const double c = grid_->inner(f, q);
      for (size_t i = 0; i < f.size(); ++i) out[i] -= c * q[i];
    }
    return out;
  }

 private:
  const SphereGrid* grid_;
  std::vector<ScalarField> ortho_;
};

}  // namespace sphereflow
