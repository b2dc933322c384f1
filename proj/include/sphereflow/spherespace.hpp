#pragma once

// The manifold of stationary states: graph functions of nearby geodesic
// spheres, their parameter domain, the plane-equation residual used to
// validate the arctan branch, the tangent-space linearization, and
// least-squares sphere fitting.

#include <Eigen/Dense>
#include <cmath>

#include "sphereflow/errors.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/grid.hpp"

namespace sphereflow {

struct SphereParams {
  Eigen::VectorXd b;  // length n+2

  SphereParams() = default;
  explicit SphereParams(Eigen::VectorXd params) : b(std::move(params)) {}

  double tilt_norm_sq() const {
    double s = 0.0;
    for (int i = 0; i + 1 < b.size(); ++i) s += b[i] * b[i];
    return s;
  }
  double height() const { return b[b.size() - 1]; }

  // b_{n+2} in (-1-cos, 1-cos) and (1+|b|^2)(cos+b_{n+2})^2 < 1; the second
  // condition makes the sphere separate the poles.
  bool valid(double theta) const {
    const double c = std::cos(theta);
    const double z = height();
    if (!(z > -1.0 - c && z < 1.0 - c)) return false;
    return (1.0 + tilt_norm_sq()) * (c + z) * (c + z) < 1.0;
  }
};

// Graph function of the geodesic sphere cut out by the plane
//   x_{n+2} + sum b_i x_i = sqrt(1+|b|^2)(cos(theta) + b_{n+2}).
// The colatitude q solves cos q + S sin q = A with S = sum b_i Y_i(p); the
// branch is fixed by sin q > 0 (q in (0, pi)), realized via atan2, which
// matches the arctan: R -> [0, pi) convention and completes continuously
// with q = pi/2 where the denominator vanishes.
inline GraphFunction u_from_params(const SphereParams& params, double theta,
                                   const SphereGrid& grid) {
  const int n = grid.dim();
  if (params.b.size() != n + 2) throw ConfigError("sphere params length != n+2");
  if (!params.valid(theta)) throw DomainError("sphere params outside their domain");

  const double A = std::sqrt(1.0 + params.tilt_norm_sq()) * (std::cos(theta) + params.height());
  const auto Y = grid.harmonics_first_order();
  ScalarField u(grid.node_count());
  for (int node = 0; node < grid.node_count(); ++node) {
    double S = 0.0;
    for (int i = 0; i <= n; ++i) S += params.b[i] * Y[i][node];
    const double R = 1.0 + S * S - A * A;
    if (!(R > 0.0)) throw DomainError("sphere params: radicand not positive");
    const double sq = (A * S + std::sqrt(R)) / (1.0 + S * S);
    const double cq = A - S * sq;
    u[node] = std::atan2(sq, cq) - theta;
  }
  GraphFunction gf(grid, theta, std::move(u));
  require_valid(gf);
  return gf;
}

// max over nodes of the plane-equation defect of the embedded graph.
inline double plane_residual(const SphereParams& params, const GraphFunction& gf) {
  const auto& grid = *gf.grid;
  const int n = grid.dim();
  if (params.b.size() != n + 2) throw ConfigError("sphere params length != n+2");
  const double rhs = std::sqrt(1.0 + params.tilt_norm_sq()) * (std::cos(gf.theta) + params.height());
  const auto pts = embed(gf);
  double worst = 0.0;
  for (int node = 0; node < grid.node_count(); ++node) {
    double lhs = pts[node][n + 1];
    for (int i = 0; i <= n; ++i) lhs += params.b[i] * pts[node][i];
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

// Verified branch construction: u_from_params followed by the plane check.
inline GraphFunction sphere_graph(const SphereParams& params, double theta,
                                  const SphereGrid& grid) {
  GraphFunction gf = u_from_params(params, theta, grid);
  const double res = plane_residual(params, gf);
  if (res > 1e-9) throw BranchError("sphere graph violates its plane equation");
  return gf;
}

struct TangentCheckReport {
  std::vector<double> direction_error;  // per parameter direction, max norm
  double linearity_error = 0.0;
  double max_error = 0.0;
};

// Central finite differences of b -> u_b at b = 0 against the tangent basis
// fields: direction e_j gives Y_j for j <= n+1; the height direction gives
// the constant -1/sin(theta) (outward radius shrinks as the plane rises).
inline TangentCheckReport tangent_linearization_check(double theta, const SphereGrid& grid) {
  const int n = grid.dim();
  const double eps = 1e-5;
  TangentCheckReport rep;
  const auto Y = grid.harmonics_first_order();

  auto fd_direction = [&](const Eigen::VectorXd& dir) {
    SphereParams bp(eps * dir), bm(-eps * dir);
    const auto up = u_from_params(bp, theta, grid).u;
    const auto um = u_from_params(bm, theta, grid).u;
    ScalarField d(grid.node_count());
    for (int i = 0; i < grid.node_count(); ++i) d[i] = (up[i] - um[i]) / (2.0 * eps);
    return d;
  };

  for (int j = 0; j < n + 2; ++j) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(n + 2);
    dir[j] = 1.0;
    const auto d = fd_direction(dir);
    double err = 0.0;
    for (int node = 0; node < grid.node_count(); ++node) {
      const double expect = j <= n ? Y[j][node] : -1.0 / std::sin(theta);
      err = std::max(err, std::abs(d[node] - expect));
    }
    rep.direction_error.push_back(err);
    rep.max_error = std::max(rep.max_error, err);
  }

  // linearity along a mixed direction
  Eigen::VectorXd mixed = Eigen::VectorXd::Zero(n + 2);
  for (int j = 0; j < n + 2; ++j) mixed[j] = 0.3 + 0.1 * j;
  const auto dm = fd_direction(mixed);
  double lin_err = 0.0;
  for (int node = 0; node < grid.node_count(); ++node) {
    double expect = mixed[n + 1] * (-1.0 / std::sin(theta));
    for (int j = 0; j <= n; ++j) expect += mixed[j] * Y[j][node];
    lin_err = std::max(lin_err, std::abs(dm[node] - expect));
  }
  rep.linearity_error = lin_err;
  rep.max_error = std::max(rep.max_error, lin_err);
  return rep;
}

struct SphereFit {
  SphereParams params;
  double residual = 0.0;  // max-norm of u - u_{b*}
  int iterations = 0;
};

// Gauss-Newton minimization of the quadrature L^2 norm of u - u_b,
// Jacobian by central differences, initialized at b = 0.
inline SphereFit fit_sphere(const GraphFunction& gf, int max_iterations = 50) {
  const auto& grid = *gf.grid;
  const int n = grid.dim();
  const int np = n + 2;
  const int nodes = grid.node_count();

  Eigen::VectorXd b = Eigen::VectorXd::Zero(np);
  const double jac_eps = 1e-7;

  auto eval_u = [&](const Eigen::VectorXd& bv) {
    SphereParams p(bv);
    if (!p.valid(gf.theta)) throw DomainError("fit_sphere: iterate left the parameter domain");
    return u_from_params(p, gf.theta, grid).u;
  };

  std::vector<double> sw(nodes);
  for (int i = 0; i < nodes; ++i) sw[i] = std::sqrt(grid.weight(i));

  SphereFit fit;
  for (int it = 0; it < max_iterations; ++it) {
    fit.iterations = it + 1;
    const auto ub = eval_u(b);
    Eigen::VectorXd r(nodes);
    for (int i = 0; i < nodes; ++i) r[i] = sw[i] * (gf.u[i] - ub[i]);
    Eigen::MatrixXd J(nodes, np);
    for (int j = 0; j < np; ++j) {
      Eigen::VectorXd bp = b, bm = b;
      bp[j] += jac_eps;
      bm[j] -= jac_eps;
      const auto up = eval_u(bp);
      const auto um = eval_u(bm);
      for (int i = 0; i < nodes; ++i) J(i, j) = sw[i] * (up[i] - um[i]) / (2.0 * jac_eps);
    }
    const Eigen::VectorXd step = (J.transpose() * J).ldlt().solve(J.transpose() * r);
    b += step;
    SphereParams p(b);
    if (!p.valid(gf.theta)) throw DomainError("fit_sphere: iterate left the parameter domain");
    if (step.norm() < 1e-12) {
      fit.params = p;
      const auto uf = eval_u(b);
      double res = 0.0;
      for (int i = 0; i < nodes; ++i) res = std::max(res, std::abs(gf.u[i] - uf[i]));
      fit.residual = res;
      return fit;
    }
  }
  throw NoConvergenceError("fit_sphere: no convergence within the iteration limit");
}

}  // namespace sphereflow
