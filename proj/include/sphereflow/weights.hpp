#pragma once

// Weight fields Xi_a(X_u): the integrands pairing with normal speed in the
// first variation of the mixed volumes.  Includes their closed forms on the
// base sphere, the combined field Xi_hat, and the alternative intrinsic
// volume linearizations Z_hat.
//
// For a <= n,
//   Xi_a = -g^{ik} [ (dE_{n-a}/dh^i_j) gbar(Rbar(nu,T_k)nu, T_j)
//                    + nabla_j nabla_k (dE_{n-a}/dh^i_j) ] / ((n+1) C(n, n-a))
//          + E_{n+1-a} / C(n+1, n+1-a),
// with gbar(Rbar(nu,T_k)nu, T_j) = g_kj in the unit round ambient.  The
// covariant term is assembled pointwise from exact coordinate partials of
// the tensor and metric: on S^2 the coordinate components of tensor fields
// are singular at the poles, so their partials are obtained by chain rule
// through 2-jets seeded with spectral derivatives of u, never by
// re-analyzing the component fields.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sphereflow/errors.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/grid.hpp"
#include "sphereflow/symfunc.hpp"

namespace sphereflow {

struct WeightSpec {
  Eigen::VectorXd c;  // coefficients c_0..c_{n+1}

  WeightSpec() = default;
  explicit WeightSpec(Eigen::VectorXd coeffs) : c(std::move(coeffs)) {
    if (c.size() < 2) throw ConfigError("weight spec needs n+2 coefficients");
    if (c.lpNorm<Eigen::Infinity>() == 0.0) throw ConfigError("weight spec must not be zero");
  }

  static WeightSpec basis(int n, int a) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 2);
    c[a] = 1.0;
    return WeightSpec(c);
  }
};

// Lemma closed form on the base sphere:
// Xi_a(X_0) = cot^{n-a-1}(theta) (a cot^2 theta - n + a) / (n+1), a <= n; 1 at a = n+1.
inline double xi_sphere_closed_form(int n, double theta, int a) {
  if (a < 0 || a > n + 1) throw DomainError("xi_sphere_closed_form: a out of range");
  if (a == n + 1) return 1.0;
  const double ct = std::cos(theta) / std::sin(theta);
  double val = 0.0;
  if (a != 0) val += a * std::pow(ct, n - a + 1);
  if (a != n) val += (a - n) * std::pow(ct, n - a - 1);
  return val / (n + 1);
}

inline double xi_hat_sphere(const WeightSpec& spec, int n, double theta) {
  if (spec.c.size() != n + 2) throw ConfigError("weight spec length != n+2");
  double acc = 0.0;
  for (int a = 0; a <= n + 1; ++a) acc += spec.c[a] * xi_sphere_closed_form(n, theta, a);
  return acc;
}

constexpr double kWeightDegeneracyFloor = 1e-8;

inline void require_weight_nondegenerate(const WeightSpec& spec, int n, double theta) {
  if (std::abs(xi_hat_sphere(spec, n, theta)) <= kWeightDegeneracyFloor)
    throw DegenerateWeightError("Xi_hat vanishes on the base sphere for this theta");
}

// Z_hat_a(X_0) for the Gamma-weighted intrinsic volume combination.  The
// closed form follows from summing the Xi closed forms; the power is of
// cot(theta), which the summation itself produces.
inline double zhat_sphere(int n, double theta, int a) {
  if (a < 0 || a > n + 1) throw DomainError("zhat_sphere: a out of range");
  if (a == 0) return 0.0;
  const double ct = std::cos(theta) / std::sin(theta);
  return a * std::tgamma(n + 1.0) * std::pow(ct, n + 1 - a) /
         (std::pow(2.0, n + 2) * std::pow(kPi, 0.5 * n) * std::tgamma(0.5 * a + 1.0) *
          std::tgamma(0.5 * (n - a) + 1.0));
}

// Coefficients c with Z_hat_a = sum_b c_{a+2b} Xi_{a+2b}, as a WeightSpec.
inline WeightSpec zhat_weightspec(int n, int a) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 2);
  const double front = std::tgamma(n + 2.0) / (std::pow(2.0, n + 2) * std::pow(kPi, 0.5 * n));
  for (int b = 0; a + 2 * b <= n + 1; ++b) {
    const int idx = a + 2 * b;
    c[idx] = front / (std::tgamma(0.5 * idx + 1.0) * std::tgamma(0.5 * (n - idx) + 1.0));
  }
  return WeightSpec(c);
}

namespace detail {

// nabla_j nabla_k T^j_i at a single node from pointwise values of the
// metric, tensor, and their first/second coordinate partials.
// Packing (d = dim): g[i*d+j]; dg[(l*d+i)*d+j] = d_l g_ij;
// ddg[((m*d+l)*d+i)*d+j] = d_m d_l g_ij; T[j*d+i] = T^j_i (upper index
// first); dT, ddT analogous with leading derivative slots.
inline void covariant_second_derivative_point(int d, const double* g, const double* dg,
                                              const double* ddg, const double* T,
                                              const double* dT, const double* ddT, double* B) {
  double gi[4];
  double det;
  if (d == 1) {
    det = g[0];
    gi[0] = 1.0 / g[0];
  } else {
    det = g[0] * g[3] - g[1] * g[2];
    gi[0] = g[3] / det;
    gi[3] = g[0] / det;
    gi[1] = -g[1] / det;
    gi[2] = gi[1];
  }
  if (det < 1e-12) throw SingularMetricError("metric determinant below 1e-12");

  auto G = [&](const double* m, int i, int j) { return m[i * d + j]; };
  auto DG = [&](int l, int i, int j) { return dg[(l * d + i) * d + j]; };
  auto DDG = [&](int m, int l, int i, int j) { return ddg[((m * d + l) * d + i) * d + j]; };
  auto Tm = [&](int j, int i) { return T[j * d + i]; };
  auto DT = [&](int l, int j, int i) { return dT[(l * d + j) * d + i]; };
  auto DDT = [&](int m, int l, int j, int i) { return ddT[((m * d + l) * d + j) * d + i]; };

  double dgi[2][2][2];  // d_m g^{ab}
  for (int m = 0; m < d; ++m)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double acc = 0.0;
        for (int p = 0; p < d; ++p)
          for (int q = 0; q < d; ++q) acc -= G(gi, a, p) * G(gi, b, q) * DG(m, p, q);
        dgi[m][a][b] = acc;
      }

  double Ga[2][2][2];     // Gamma^k_ij
  double dGa[2][2][2][2];  // d_m Gamma^k_ij
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int l = 0; l < d; ++l)
          acc += G(gi, k, l) * (DG(i, j, l) + DG(j, i, l) - DG(l, i, j));
        Ga[k][i][j] = 0.5 * acc;
        for (int m = 0; m < d; ++m) {
          double dacc = 0.0;
          for (int l = 0; l < d; ++l)
            dacc += dgi[m][k][l] * (DG(i, j, l) + DG(j, i, l) - DG(l, i, j)) +
                    G(gi, k, l) * (DDG(m, i, j, l) + DDG(m, j, i, l) - DDG(m, l, i, j));
          dGa[m][k][i][j] = 0.5 * dacc;
        }
      }

  double A[2][2][2];    // A^j_{ki} = nabla_k T^j_i
  double dA[2][2][2][2];  // d_l A^j_{ki}
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i) {
        double acc = DT(k, j, i);
        for (int m = 0; m < d; ++m)
          acc += Ga[j][k][m] * Tm(m, i) - Ga[m][k][i] * Tm(j, m);
        A[j][k][i] = acc;
        for (int l = 0; l < d; ++l) {
          double dacc = DDT(l, k, j, i);
          for (int m = 0; m < d; ++m)
            dacc += dGa[l][j][k][m] * Tm(m, i) + Ga[j][k][m] * DT(l, m, i) -
                    dGa[l][m][k][i] * Tm(j, m) - Ga[m][k][i] * DT(l, j, m);
          dA[l][j][k][i] = dacc;
        }
      }

  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        acc += dA[j][j][k][i];
        for (int m = 0; m < d; ++m)
          acc += Ga[j][j][m] * A[m][k][i] - Ga[m][j][k] * A[j][m][i] - Ga[m][j][i] * A[j][k][m];
      }
      B[k * d + i] = acc;
    }
}

// metric 2-jets only (for the constant-tensor weight cases)
template <int DIM>
void metric_jets(const JetCtx<DIM>& ctx, double theta, Jet<DIM> g[DIM][DIM]) {
  using S = Jet<DIM>;
  const S Q = ctx.u(0, 0) + theta;
  const S sQ2 = sin(Q) * sin(Q);
  S Qd[DIM];
  Qd[0] = ctx.u(1, 0);
  if constexpr (DIM == 2) Qd[1] = ctx.u(0, 1);
  for (int i = 0; i < DIM; ++i)
    for (int j = 0; j < DIM; ++j) g[i][j] = sQ2 * ctx.g0(i, j, 0, 0) + Qd[i] * Qd[j];
}

template <int DIM>
void extract_metric_point(const Jet<DIM> g[DIM][DIM], double* gv, double* dgv, double* ddgv) {
  constexpr int d = DIM;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      gv[i * d + j] = g[i][j].v;
      for (int l = 0; l < d; ++l) dgv[(l * d + i) * d + j] = g[i][j].d[l];
      for (int m = 0; m < d; ++m)
        for (int l = 0; l < d; ++l) ddgv[((m * d + l) * d + i) * d + j] = g[i][j].hess(m, l);
    }
}

template <int DIM>
std::vector<ScalarField> xi_fields_impl(const GeometryFields& fields, const ScalarField& u,
                                        const std::vector<int>& as) {
  const auto& grid = *fields.grid;
  const int n = DIM;
  const int nodes = grid.node_count();
  const double theta = fields.theta;

  bool needs_tensor_jets = false;  // any requested a with a nonconstant derivative tensor
  for (int a : as)
    if (a <= n && n - a >= 2) needs_tensor_jets = true;

  const auto ud = grid.u_derivatives(u, needs_tensor_jets ? 4 : 3);
  std::vector<ScalarField> out(as.size(), ScalarField(nodes, 0.0));

  parallel_for(nodes, [&](int node) {
    JetCtx<DIM> ctx(grid.coord(node, 0), DIM == 2 ? grid.coord(node, 1) : 0.0);
    for (size_t t = 0; t < ud.size(); ++t) ctx.ud[t] = ud[t][node];

    constexpr int d = DIM;
    double gv[4], dgv[8], ddgv[16];
    double Ebig[DIM + 1];
    double Wv[4] = {0, 0, 0, 0};
    double ginvv[4] = {0, 0, 0, 0};

    Jet<DIM> Tj[DIM][DIM];  // derivative tensor jets, reused across a values
    Jet<DIM> Wjet[DIM][DIM], Ejet[DIM + 1];
    bool have_full = false;

    if (needs_tensor_jets) {
      const auto geo = assemble_node(ctx, theta);
      extract_metric_point<DIM>(geo.g, gv, dgv, ddgv);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          Wjet[i][j] = geo.W[i][j];
          Wv[i * d + j] = geo.W[i][j].v;
          ginvv[i * d + j] = geo.ginv[i][j].v;
        }
      for (int a = 0; a <= n; ++a) Ejet[a] = geo.E[a];
      for (int a = 0; a <= n; ++a) Ebig[a] = geo.E[a].v;
      have_full = true;
    } else {
      Jet<DIM> gj[DIM][DIM];
      metric_jets<DIM>(ctx, theta, gj);
      extract_metric_point<DIM>(gj, gv, dgv, ddgv);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          Wv[i * d + j] = fields.W.at(node, i, j);
          ginvv[i * d + j] = fields.ginv.at(node, i, j);
        }
      Eigen::VectorXd kap(n);
      for (int i = 0; i < n; ++i) kap[i] = fields.kappa.at(node, i);
      const Eigen::VectorXd E = elementary_symmetric(kap);
      for (int a = 0; a <= n; ++a) Ebig[a] = E[a];
    }

    for (size_t t = 0; t < as.size(); ++t) {
      const int a = as[t];
      if (a == n + 1) {
        out[t][node] = 1.0;
        continue;
      }
      const int order = n - a;  // degree of the derivative tensor E_{order}
      double Tv[4] = {0, 0, 0, 0}, dTv[8] = {0, 0, 0, 0, 0, 0, 0, 0};
      double ddTv[16] = {0};
      double trT = 0.0;
      if (order >= 2 && have_full) {
        Jet<DIM> D[DIM][DIM];
        esym_derivative_tensor_t<Jet<DIM>, DIM>(Wjet, Ejet, order, D);
        // T^j_i = dE/dh^i_j = D[i][j]
        for (int j = 0; j < d; ++j)
          for (int i = 0; i < d; ++i) {
            const auto& jet = D[i][j];
            Tv[j * d + i] = jet.v;
            for (int l = 0; l < d; ++l) dTv[(l * d + j) * d + i] = jet.d[l];
            for (int m = 0; m < d; ++m)
              for (int l = 0; l < d; ++l)
                ddTv[((m * d + l) * d + j) * d + i] = jet.hess(m, l);
            trT += i == j ? jet.v : 0.0;
          }
      } else if (order == 1) {
        // dE_1/dh = identity, a constant tensor
        for (int i = 0; i < d; ++i) Tv[i * d + i] = 1.0;
        trT = d;
      }  // order == 0: zero tensor

      double B[4] = {0, 0, 0, 0};
      covariant_second_derivative_point(d, gv, dgv, ddgv, Tv, dTv, ddTv, B);
      double contracted = 0.0;  // g^{ik} B_{ki}
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) contracted += ginvv[i * d + k] * B[k * d + i];

      double xi = -(trT + contracted) / ((n + 1) * binomial(n, n - a));
      if (n + 1 - a <= n) xi += Ebig[n + 1 - a] / binomial(n + 1, n + 1 - a);
      out[t][node] = xi;
    }
  });
  return out;
}

}  // namespace detail

// Xi_a evaluated on the graph described by `fields` (which retains its u).
inline ScalarField xi_a_field(const GeometryFields& fields, int a) {
  const int n = fields.grid->dim();
  if (a < 0 || a > n + 1) throw DomainError("xi_a_field: a out of range");
  std::vector<int> as = {a};
  auto v = n == 1 ? detail::xi_fields_impl<1>(fields, fields.u, as)
                  : detail::xi_fields_impl<2>(fields, fields.u, as);
  return std::move(v[0]);
}

// Xi_hat = sum_a c_a Xi_a.  DegenerateWeightError when the combination
// vanishes on the base sphere for this theta.
inline ScalarField xi_hat_field(const GeometryFields& fields, const WeightSpec& spec) {
  const int n = fields.grid->dim();
  if (spec.c.size() != n + 2) throw ConfigError("weight spec length != n+2");
  require_weight_nondegenerate(spec, n, fields.theta);
  std::vector<int> as;
  for (int a = 0; a <= n + 1; ++a)
    if (spec.c[a] != 0.0) as.push_back(a);
  auto fieldsv = n == 1 ? detail::xi_fields_impl<1>(fields, fields.u, as)
                        : detail::xi_fields_impl<2>(fields, fields.u, as);
  ScalarField out(fields.grid->node_count(), 0.0);
  for (size_t t = 0; t < as.size(); ++t)
    for (size_t i = 0; i < out.size(); ++i) out[i] += spec.c[as[t]] * fieldsv[t][i];
  return out;
}

}  // namespace sphereflow
