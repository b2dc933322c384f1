#pragma once

// Mixed volumes V_a, the conserved combination V_hat = sum c_a V_a, the
// enclosed volume, and the finite-difference vs analytic linearization
// comparison used by the conservation diagnostics.

#include <Eigen/Dense>
#include <cmath>

#include "sphereflow/errors.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/weights.hpp"

namespace sphereflow {

struct VolumeReport {
  Eigen::VectorXd v;  // V_0 .. V_{n+1}
  double area = 0.0;
};

namespace detail {
// int_0^x sin^n(s) ds in closed form for n = 1, 2
inline double sin_power_integral(int n, double x) {
  if (n == 1) return 1.0 - std::cos(x);
  return 0.5 * (x - std::sin(x) * std::cos(x));
}
}  // namespace detail

// V_a = int E_{n-a} dmu / ((n+1) C(n, n-a)) for a <= n;
// V_{n+1} = Vol(Omega) with the pole q_{n+1} = 0 interior.
inline VolumeReport mixed_volumes(const GraphFunction& gf, const GeometryFields& fields) {
  const auto& grid = *gf.grid;
  const int n = grid.dim();
  VolumeReport rep;
  rep.v = Eigen::VectorXd::Zero(n + 2);
  const ScalarField ones(grid.node_count(), 1.0);
  rep.area = grid.integrate(ones, fields.mu);
  for (int a = 0; a <= n; ++a) {
    const ScalarField e = fields.esym_field(n - a);
    rep.v[a] = grid.integrate(e, fields.mu) / ((n + 1) * binomial(n, n - a));
  }
  ScalarField shell(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i)
    shell[i] = detail::sin_power_integral(n, gf.theta + gf.u[i]);
  rep.v[n + 1] = grid.integrate(shell, ones);
  return rep;
}

inline double vhat(const VolumeReport& rep, const WeightSpec& spec) {
  if (spec.c.size() != rep.v.size()) throw ConfigError("weight spec length mismatch");
  double acc = 0.0;
  for (int a = 0; a < rep.v.size(); ++a) acc += spec.c[a] * rep.v[a];
  return acc;
}

struct DirectionalDerivative {
  double fd = 0.0;        // central finite difference of V_hat
  double analytic = 0.0;  // int Xi_hat L^{-1} w dmu
};

// Central-difference vs analytic first variation of V_hat along the normal
// graph variation w.  Both values are returned for comparison; the FD side
// is the independent oracle.
inline DirectionalDerivative vhat_directional_derivative(const GraphFunction& gf,
                                                         const ScalarField& w,
                                                         const WeightSpec& spec,
                                                         double eps = 1e-5) {
  const auto& grid = *gf.grid;
  DirectionalDerivative out;

  ScalarField up = gf.u, um = gf.u;
  for (size_t i = 0; i < up.size(); ++i) {
    up[i] += eps * w[i];
    um[i] -= eps * w[i];
  }
  GraphFunction gp(grid, gf.theta, up), gm(grid, gf.theta, um);
  const auto fp = geometry_fields(gp);
  const auto fm = geometry_fields(gm);
  out.fd = (vhat(mixed_volumes(gp, fp), spec) - vhat(mixed_volumes(gm, fm), spec)) / (2.0 * eps);

  const auto fields = geometry_fields(gf);
  const ScalarField xh = xi_hat_field(fields, spec);
  ScalarField integrand(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) integrand[i] = xh[i] * w[i] / fields.L[i];
  out.analytic = grid.integrate(integrand, fields.mu);
  return out;
}

}  // namespace sphereflow
