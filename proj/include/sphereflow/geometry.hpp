#pragma once

// Geometry of normal geodesic graphs X_u over the base sphere S_theta in
// S^{n+1}: embedding through R^{n+2}, induced metric, unit normal, second
// fundamental form, Weingarten map, principal curvatures, tilt factor L.
//
// All extrinsic quantities go through the Euclidean embedding
//   Z(q) = (cos(q_{i-1}) prod_{j>=i} sin(q_j), ..., cos(q_{n+1})),
// where the graph is q = (p, theta + u(p)).  The node assembly is templated
// on the scalar type: with plain doubles it produces the geometry fields;
// with 2-jets it propagates exact first and second coordinate partials of
// every quantity into the weight-field machinery.

#include <algorithm>
#include <array>
#include <cmath>

#include "sphereflow/errors.hpp"
#include "sphereflow/grid.hpp"
#include "sphereflow/jet.hpp"
#include "sphereflow/symfunc.hpp"
#include "sphereflow/util.hpp"

namespace sphereflow {

struct GraphFunction {
  const SphereGrid* grid = nullptr;
  double theta = 0.0;
  ScalarField u;

  GraphFunction() = default;
  GraphFunction(const SphereGrid& g, double th, ScalarField values)
      : grid(&g), theta(th), u(std::move(values)) {
    if (int(u.size()) != g.node_count()) throw ConfigError("graph function size mismatch");
    if (!(theta > 0.0 && theta < kPi)) throw ConfigError("theta must lie in (0, pi)");
  }

  double injectivity_bound() const { return std::min(theta, kPi - theta); }
};

struct GraphDiagnostics {
  double max_u = 0.0;
  double max_grad = 0.0;   // max |grad u|_{g(u)}
  double u_margin = 0.0;   // injectivity bound - max_u
  double grad_margin = 0.0;  // 1 - max_grad
  bool valid = false;
};

namespace detail {

// derivative tables of sin/cos at a point, orders 0..4
struct TrigTable {
  std::array<double, 5> s, c;
  explicit TrigTable(double x) {
    const double sv = std::sin(x), cv = std::cos(x);
    s = {sv, cv, -sv, -cv, sv};
    c = {cv, -sv, -cv, sv, cv};
  }
};

// Per-node context with plain double scalars (values only; u-partials to
// order 2).
template <int DIM>
struct ValueCtx {
  using S = double;
  static constexpr int kDim = DIM;
  std::array<double, 6> ud{};  // packed u-partials
  TrigTable t1, t2;

  ValueCtx(double p1, double p2) : t1(p1), t2(p2) {}

  static int uidx(int a, int b) {
    if constexpr (DIM == 1) return a;
    const int t = a + b;
    return t * (t + 1) / 2 + (t - a);
  }
  double u(int a, int b) const { return ud[uidx(a, b)]; }

  // chart components c_1..c_{DIM+1} of the unit S^n embedding
  double c(int comp, int a, int b) const {
    if constexpr (DIM == 1) {
      return comp == 0 ? t1.s[a] : t1.c[a];
    } else {
      if (comp == 0) return t1.s[a] * t2.s[b];
      if (comp == 1) return t1.c[a] * t2.s[b];
      return a == 0 ? t2.c[b] : 0.0;
    }
  }

  // round metric g_{S^n} components and their partials
  double g0(int i, int j, int a, int b) const {
    if constexpr (DIM == 1) {
      return (a == 0 && b == 0) ? 1.0 : 0.0;
    } else {
      if (i != j) return 0.0;
      if (i == 1) return (a == 0 && b == 0) ? 1.0 : 0.0;
      if (a != 0) return 0.0;
      return sin2_deriv(b);
    }
  }
  double detg0(int a, int b) const {
    if constexpr (DIM == 1) {
      return (a == 0 && b == 0) ? 1.0 : 0.0;
    } else {
      return a == 0 ? sin2_deriv(b) : 0.0;
    }
  }

 private:
  // d^b/dx^b sin^2(x) at p2
  double sin2_deriv(int b) const {
    switch (b) {
      case 0: return t2.s[0] * t2.s[0];
      case 1: return 2.0 * t2.s[0] * t2.c[0];
      case 2: return 2.0 * (t2.c[0] * t2.c[0] - t2.s[0] * t2.s[0]);
      case 3: return -8.0 * t2.s[0] * t2.c[0];
      case 4: return -8.0 * (t2.c[0] * t2.c[0] - t2.s[0] * t2.s[0]);
    }
    return 0.0;
  }
};

// Per-node context carrying 2-jets; u-partials must be supplied to order 4.
template <int DIM>
struct JetCtx {
  using S = Jet<DIM>;
  static constexpr int kDim = DIM;
  std::array<double, 15> ud{};  // packed u-partials to order 4
  TrigTable t1, t2;

  JetCtx(double p1, double p2) : t1(p1), t2(p2) {}

  static int uidx(int a, int b) {
    if constexpr (DIM == 1) return a;
    const int t = a + b;
    return t * (t + 1) / 2 + (t - a);
  }

  S u(int a, int b) const {
    S j;
    j.v = ud[uidx(a, b)];
    if constexpr (DIM == 1) {
      j.d[0] = ud[uidx(a + 1, 0)];
      j.h[0] = ud[uidx(a + 2, 0)];
    } else {
      j.d[0] = ud[uidx(a + 1, b)];
      j.d[1] = ud[uidx(a, b + 1)];
      j.h[0] = ud[uidx(a + 2, b)];
      j.h[1] = ud[uidx(a + 1, b + 1)];
      j.h[2] = ud[uidx(a, b + 2)];
    }
    return j;
  }

  S c(int comp, int a, int b) const {
    return make_jet([this, comp](int aa, int bb) { return c_val(comp, aa, bb); }, a, b);
  }
  S g0(int i, int j, int a, int b) const {
    return make_jet([this, i, j](int aa, int bb) { return g0_val(i, j, aa, bb); }, a, b);
  }
  S detg0(int a, int b) const {
    return make_jet([this](int aa, int bb) { return detg0_val(aa, bb); }, a, b);
  }

 private:
  template <class F>
  S make_jet(F&& val, int a, int b) const {
    S j;
    j.v = val(a, b);
    if constexpr (DIM == 1) {
      j.d[0] = val(a + 1, 0);
      j.h[0] = val(a + 2, 0);
    } else {
      j.d[0] = val(a + 1, b);
      j.d[1] = val(a, b + 1);
      j.h[0] = val(a + 2, b);
      j.h[1] = val(a + 1, b + 1);
      j.h[2] = val(a, b + 2);
    }
    return j;
  }

  double c_val(int comp, int a, int b) const {
    if constexpr (DIM == 1) {
      return comp == 0 ? t1.s[a] : t1.c[a];
    } else {
      if (comp == 0) return t1.s[a] * t2.s[b];
      if (comp == 1) return t1.c[a] * t2.s[b];
      return a == 0 ? t2.c[b] : 0.0;
    }
  }
  double g0_val(int i, int j, int a, int b) const {
    if constexpr (DIM == 1) {
      return (a == 0 && b == 0) ? 1.0 : 0.0;
    } else {
      if (i != j) return 0.0;
      if (i == 1) return (a == 0 && b == 0) ? 1.0 : 0.0;
      if (a != 0) return 0.0;
      return sin2_deriv(b);
    }
  }
  double detg0_val(int a, int b) const {
    if constexpr (DIM == 1) return (a == 0 && b == 0) ? 1.0 : 0.0;
    return a == 0 ? sin2_deriv(b) : 0.0;
  }
  double sin2_deriv(int b) const {
    switch (b) {
      case 0: return t2.s[0] * t2.s[0];
      case 1: return 2.0 * t2.s[0] * t2.c[0];
      case 2: return 2.0 * (t2.c[0] * t2.c[0] - t2.s[0] * t2.s[0]);
      case 3: return -8.0 * t2.s[0] * t2.c[0];
      case 4: return -8.0 * (t2.c[0] * t2.c[0] - t2.s[0] * t2.s[0]);
    }
    return 0.0;
  }
};

// Full per-node geometric state.
template <class Ctx>
struct GeoCore {
  using S = typename Ctx::S;
  static constexpr int DIM = Ctx::kDim;
  static constexpr int AMB = DIM + 2;

  S X[AMB], gdot[AMB], nu[AMB];
  S T[DIM][AMB], H[DIM][DIM][AMB];
  S g[DIM][DIM], ginv[DIM][DIM];
  S detg, detg0, mu, gradsq, L;
  S h[DIM][DIM], W[DIM][DIM];
  S E[DIM + 1];
};

// Assemble the graph geometry at one node.  Throws DomainError when the
// gradient bound |grad u| < 1 fails at this node.
template <class Ctx>
GeoCore<Ctx> assemble_node(const Ctx& ctx, double theta) {
  using S = typename Ctx::S;
  constexpr int DIM = Ctx::kDim;
  constexpr int AMB = DIM + 2;
  GeoCore<Ctx> geo;

  const S Q = ctx.u(0, 0) + theta;
  const S sQ = sin(Q), cQ = cos(Q);
  S Qd[DIM], Qdd[DIM][DIM];
  if constexpr (DIM == 1) {
    Qd[0] = ctx.u(1, 0);
    Qdd[0][0] = ctx.u(2, 0);
  } else {
    Qd[0] = ctx.u(1, 0);
    Qd[1] = ctx.u(0, 1);
    Qdd[0][0] = ctx.u(2, 0);
    Qdd[0][1] = Qdd[1][0] = ctx.u(1, 1);
    Qdd[1][1] = ctx.u(0, 2);
  }

  auto da = [](int i) { return i == 0 ? 1 : 0; };
  auto db = [](int i) { return i == 0 ? 0 : 1; };

  // embedding, tangents, flat second derivatives
  for (int A = 0; A < AMB - 1; ++A) {
    const S cA = ctx.c(A, 0, 0);
    geo.X[A] = cA * sQ;
    geo.gdot[A] = cA * cQ;
    for (int i = 0; i < DIM; ++i)
      geo.T[i][A] = ctx.c(A, da(i), db(i)) * sQ + cA * (cQ * Qd[i]);
    for (int i = 0; i < DIM; ++i)
      for (int j = i; j < DIM; ++j) {
        S v = ctx.c(A, da(i) + da(j), db(i) + db(j)) * sQ +
              ctx.c(A, da(i), db(i)) * (cQ * Qd[j]) + ctx.c(A, da(j), db(j)) * (cQ * Qd[i]) +
              cA * (cQ * Qdd[i][j] - sQ * (Qd[i] * Qd[j]));
        geo.H[i][j][A] = v;
        geo.H[j][i][A] = v;
      }
  }
  geo.X[AMB - 1] = cQ;
  geo.gdot[AMB - 1] = -sQ;
  for (int i = 0; i < DIM; ++i) geo.T[i][AMB - 1] = -(sQ * Qd[i]);
  for (int i = 0; i < DIM; ++i)
    for (int j = i; j < DIM; ++j) {
      S v = -(cQ * (Qd[i] * Qd[j]) + sQ * Qdd[i][j]);
      geo.H[i][j][AMB - 1] = v;
      geo.H[j][i][AMB - 1] = v;
    }

  // induced metric g = sin^2(Q) g_{S^n} + du du
  const S sQ2 = sQ * sQ;
  for (int i = 0; i < DIM; ++i)
    for (int j = 0; j < DIM; ++j)
      geo.g[i][j] = sQ2 * ctx.g0(i, j, 0, 0) + Qd[i] * Qd[j];

  if constexpr (DIM == 1) {
    geo.detg = geo.g[0][0];
    geo.ginv[0][0] = recip(geo.g[0][0]);
  } else {
    geo.detg = geo.g[0][0] * geo.g[1][1] - geo.g[0][1] * geo.g[1][0];
    const S id = recip(geo.detg);
    geo.ginv[0][0] = geo.g[1][1] * id;
    geo.ginv[1][1] = geo.g[0][0] * id;
    geo.ginv[0][1] = -(geo.g[0][1] * id);
    geo.ginv[1][0] = geo.ginv[0][1];
  }
  if (!(value_of(geo.detg) > 1e-12)) throw SingularMetricError("metric determinant below 1e-12");

  geo.detg0 = ctx.detg0(0, 0);
  geo.mu = sqrt(geo.detg * recip(geo.detg0));

  S gs = geo.ginv[0][0] * (Qd[0] * Qd[0]);
  if constexpr (DIM == 2)
    gs += 2.0 * (geo.ginv[0][1] * (Qd[0] * Qd[1])) + geo.ginv[1][1] * (Qd[1] * Qd[1]);
  geo.gradsq = gs;
  if (!(value_of(gs) < 1.0)) throw DomainError("graph gradient bound |grad u| < 1 violated");
  geo.L = rsqrt(1.0 - gs);

  // nu = L (gamma_dot - grad u)
  S gradvec[AMB];
  for (int A = 0; A < AMB; ++A) {
    S acc = (geo.ginv[0][0] * Qd[0]) * geo.T[0][A];
    if constexpr (DIM == 2)
      acc += (geo.ginv[0][1] * Qd[0] + geo.ginv[1][1] * Qd[1]) * geo.T[1][A] +
             (geo.ginv[0][1] * Qd[1]) * geo.T[0][A];
    gradvec[A] = acc;
    geo.nu[A] = geo.L * (geo.gdot[A] - acc);
  }

  // h_ij = -<nu, D_i D_j X>; W = g^{-1} h
  for (int i = 0; i < DIM; ++i)
    for (int j = i; j < DIM; ++j) {
      S acc = geo.nu[0] * geo.H[i][j][0];
      for (int A = 1; A < AMB; ++A) acc += geo.nu[A] * geo.H[i][j][A];
      geo.h[i][j] = -acc;
      geo.h[j][i] = geo.h[i][j];
    }
  for (int i = 0; i < DIM; ++i)
    for (int j = 0; j < DIM; ++j) {
      S acc = geo.ginv[i][0] * geo.h[0][j];
      if constexpr (DIM == 2) acc += geo.ginv[i][1] * geo.h[1][j];
      geo.W[i][j] = acc;
    }

  esym_of_matrix_t<S, DIM>(geo.W, geo.E);
  return geo;
}

// principal curvatures: generalized symmetric eigenvalues of (h, g), ascending
inline void principal_curvatures(int dim, const double* g, const double* h, double* kappa) {
  if (dim == 1) {
    kappa[0] = h[0] / g[0];
    return;
  }
  const double a = g[0] * g[3] - g[1] * g[2];
  const double b = -(h[0] * g[3] + h[3] * g[0] - 2.0 * h[1] * g[1]);
  const double c = h[0] * h[3] - h[1] * h[2];
  double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) disc = 0.0;  // symmetric pencil: negative only by roundoff
  const double root = std::sqrt(disc);
  const double q = b >= 0.0 ? -0.5 * (b + root) : -0.5 * (b - root);
  double l1 = q / a;
  double l2 = q != 0.0 ? c / q : 0.0;
  if (l1 > l2) std::swap(l1, l2);
  kappa[0] = l1;
  kappa[1] = l2;
}

}  // namespace detail

struct GeometryFields {
  const SphereGrid* grid = nullptr;
  double theta = 0.0;
  ScalarField u;  // the graph function these fields were assembled from
  Tensor02Field g, h;
  Tensor02Field ginv;
  Tensor11Field W;
  ScalarField mu;      // area element relative to the unit-S^n measure
  ScalarField L;       // tilt factor
  ScalarField gradsq;  // |grad u|^2_{g(u)}
  CovectorField kappa;  // ascending per node
  std::vector<std::array<double, 4>> X, nu;  // ambient components, n+2 used

  ScalarField esym_field(int a) const {
    const int n = grid->dim();
    ScalarField out(grid->node_count());
    Eigen::VectorXd kap(n);
    for (int node = 0; node < grid->node_count(); ++node) {
      for (int i = 0; i < n; ++i) kap[i] = kappa.at(node, i);
      out[node] = elementary_symmetric(kap)[a];
    }
    return out;
  }
};

inline GraphDiagnostics validate(const GraphFunction& gf) {
  GraphDiagnostics diag;
  const auto& grid = *gf.grid;
  const int n = grid.dim();
  diag.max_u = grid.max_abs(gf.u);
  const auto ud = grid.u_derivatives(gf.u, 1);
  double mg2 = 0.0;
  for (int node = 0; node < grid.node_count(); ++node) {
    const double q = gf.theta + gf.u[node];
    const double s2 = std::sin(q) * std::sin(q);
    double grad2;
    if (n == 1) {
      const double du = ud[1][node];
      grad2 = du * du / (s2 + du * du);
    } else {
      const double u1 = ud[grid.uderiv_index(1, 0)][node];
      const double u2 = ud[grid.uderiv_index(0, 1)][node];
      const double sp = std::sin(grid.coord(node, 1));
      const double g11 = s2 * sp * sp + u1 * u1;
      const double g12 = u1 * u2;
      const double g22 = s2 + u2 * u2;
      const double det = g11 * g22 - g12 * g12;
      grad2 = (g22 * u1 * u1 - 2.0 * g12 * u1 * u2 + g11 * u2 * u2) / det;
    }
    mg2 = std::max(mg2, grad2);
  }
  diag.max_grad = std::sqrt(mg2);
  diag.u_margin = gf.injectivity_bound() - diag.max_u;
  diag.grad_margin = 1.0 - diag.max_grad;
  diag.valid = diag.u_margin > 0.0 && diag.grad_margin > 0.0;
  return diag;
}

inline void require_valid(const GraphFunction& gf) {
  const auto d = validate(gf);
  if (!d.valid) throw DomainError("graph function violates its invariants");
}

// Embedded node positions in R^{n+2}.
inline std::vector<std::array<double, 4>> embed(const GraphFunction& gf) {
  require_valid(gf);
  const auto& grid = *gf.grid;
  const int n = grid.dim();
  std::vector<std::array<double, 4>> pts(grid.node_count());
  const auto cfields = grid.harmonics_first_order();  // = chart components c_i
  for (int node = 0; node < grid.node_count(); ++node) {
    const double q = gf.theta + gf.u[node];
    const double s = std::sin(q), c = std::cos(q);
    std::array<double, 4> x{0, 0, 0, 0};
    for (int i = 0; i <= n; ++i) x[i] = cfields[i][node] * s;
    x[n + 1] = c;
    pts[node] = x;
  }
  return pts;
}

template <int DIM>
void geometry_fields_impl(const GraphFunction& gf, GeometryFields& out) {
  const auto& grid = *gf.grid;
  const int nodes = grid.node_count();
  const auto ud = grid.u_derivatives(gf.u, 2);
  std::vector<int> failed(nodes, 0);
  parallel_for(nodes, [&](int node) {
    detail::ValueCtx<DIM> ctx(grid.coord(node, 0), DIM == 2 ? grid.coord(node, 1) : 0.0);
    for (size_t t = 0; t < ud.size(); ++t) ctx.ud[t] = ud[t][node];
    try {
      const auto geo = detail::assemble_node(ctx, gf.theta);
      for (int i = 0; i < DIM; ++i)
        for (int j = 0; j < DIM; ++j) {
          out.g.at(node, i, j) = geo.g[i][j];
          out.ginv.at(node, i, j) = geo.ginv[i][j];
          out.h.at(node, i, j) = geo.h[i][j];
          out.W.at(node, i, j) = geo.W[i][j];
        }
      out.mu[node] = geo.mu;
      out.L[node] = geo.L;
      out.gradsq[node] = geo.gradsq;
      for (int A = 0; A < DIM + 2; ++A) {
        out.X[node][A] = geo.X[A];
        out.nu[node][A] = geo.nu[A];
      }
      double gm[4], hm[4], kap[2];
      for (int i = 0; i < DIM; ++i)
        for (int j = 0; j < DIM; ++j) {
          gm[i * DIM + j] = geo.g[i][j];
          hm[i * DIM + j] = geo.h[i][j];
        }
      detail::principal_curvatures(DIM, gm, hm, kap);
      for (int i = 0; i < DIM; ++i) out.kappa.at(node, i) = kap[i];
    } catch (const Error&) {
      failed[node] = 1;
    }
  });
  for (int node = 0; node < nodes; ++node)
    if (failed[node]) throw DomainError("geometry assembly failed: graph invariants violated");
}

inline GeometryFields geometry_fields(const GraphFunction& gf) {
  require_valid(gf);
  const auto& grid = *gf.grid;
  const int n = grid.dim();
  GeometryFields out;
  out.grid = &grid;
  out.theta = gf.theta;
  out.u = gf.u;
  const int nodes = grid.node_count();
  out.g = Tensor02Field(n, nodes);
  out.ginv = Tensor02Field(n, nodes);
  out.h = Tensor02Field(n, nodes);
  out.W = Tensor11Field(n, nodes);
  out.mu.assign(nodes, 0.0);
  out.L.assign(nodes, 0.0);
  out.gradsq.assign(nodes, 0.0);
  out.kappa = CovectorField(n, nodes);
  out.X.resize(nodes);
  out.nu.resize(nodes);
  if (n == 1)
    geometry_fields_impl<1>(gf, out);
  else
    geometry_fields_impl<2>(gf, out);
  return out;
}

}  // namespace sphereflow
