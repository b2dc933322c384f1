#pragma once

// Linearization DG(0) at the base sphere: analytic assembly in the
// orthonormal spherical-harmonic basis, finite-difference Jacobian of the
// full right-hand side, dense spectrum with nullspace count, the spectral
// projection onto the stationary tangent space, and pointwise variation
// self-tests for the umbilic linearization formulas.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "sphereflow/errors.hpp"
#include "sphereflow/flow.hpp"
#include "sphereflow/grid.hpp"
#include "sphereflow/symfunc.hpp"
#include "sphereflow/util.hpp"

namespace sphereflow {

enum class OperatorAssembly { kAnalytic, kNumeric };

struct LinearOperator {
  Eigen::MatrixXd matrix;  // over spectral coefficients of the retained band
  int n = 1;
  double theta = 0.0;
  SpeedSpec speed;
  OperatorAssembly assembly = OperatorAssembly::kAnalytic;
  int band = 0;
};

// w -> F'(kappa_0) sin^{-2}(theta) (Delta_{S^n} w + n w - n avg(w)),
// diagonal in the orthonormal harmonic basis.
inline LinearOperator dg0_analytic(const SphereGrid& grid, double theta, const SpeedSpec& speed) {
  const int n = grid.dim();
  require_speed_admissible(speed, n, theta);
  const double fp = speed_fprime_umbilic(speed, n, std::cos(theta) / std::sin(theta));
  const double s2 = std::sin(theta) * std::sin(theta);
  const int band = grid.filter_band();
  const int m = grid.mode_count(band);
  LinearOperator op;
  op.n = n;
  op.theta = theta;
  op.speed = speed;
  op.assembly = OperatorAssembly::kAnalytic;
  op.band = band;
  op.matrix = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    const double lap = grid.mode_laplacian_eigenvalue(k, band);
    const double mean_term = k == 0 ? double(n) : 0.0;  // avg annihilates all but degree 0
    op.matrix(k, k) = fp / s2 * (lap + n - mean_term);
  }
  return op;
}

// Central-difference Jacobian of the full right-hand side at u = 0 over the
// retained-band basis fields.
inline LinearOperator dg0_numeric(const SphereGrid& grid, double theta, const SpeedSpec& speed,
                                  const WeightSpec& spec, double eps = 1e-5) {
  if (!(eps >= 1e-7 && eps <= 1e-4)) throw ConfigError("dg0_numeric: eps must lie in [1e-7, 1e-4]");
  const int n = grid.dim();
  require_speed_admissible(speed, n, theta);
  require_weight_nondegenerate(spec, n, theta);
  const int band = grid.filter_band();
  const int m = grid.mode_count(band);
  LinearOperator op;
  op.n = n;
  op.theta = theta;
  op.speed = speed;
  op.assembly = OperatorAssembly::kNumeric;
  op.band = band;
  op.matrix = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    ScalarField mode = grid.mode_field(k, band);
    ScalarField up(grid.node_count()), um(grid.node_count());
    for (int i = 0; i < grid.node_count(); ++i) {
      up[i] = eps * mode[i];
      um[i] = -eps * mode[i];
    }
    const ScalarField gp = rhs(GraphFunction(grid, theta, up), speed, spec);
    const ScalarField gm = rhs(GraphFunction(grid, theta, um), speed, spec);
    ScalarField diff(grid.node_count());
    for (int i = 0; i < grid.node_count(); ++i) diff[i] = (gp[i] - gm[i]) / (2.0 * eps);
    const auto col = grid.analyze(diff, band);
    for (int r = 0; r < m; ++r) op.matrix(r, k) = col[r];
  }
  return op;
}

struct SpectrumResult {
  std::vector<double> eigenvalues;  // real parts, descending
  int null_multiplicity = 0;
  double null_tolerance = 0.0;
  double gap = 0.0;  // largest eigenvalue outside the nullspace
};

inline SpectrumResult spectrum(const LinearOperator& op) {
  SpectrumResult res;
  res.null_tolerance = op.assembly == OperatorAssembly::kAnalytic ? 1e-8 : 1e-4;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(op.matrix);
  const auto& ev = solver.eigenvalues();
  res.eigenvalues.resize(ev.size());
  for (int i = 0; i < ev.size(); ++i) res.eigenvalues[i] = ev[i].real();
  std::sort(res.eigenvalues.begin(), res.eigenvalues.end(), std::greater<double>());
  double gap = -std::numeric_limits<double>::infinity();
  for (double l : res.eigenvalues) {
    if (std::abs(l) <= res.null_tolerance) {
      ++res.null_multiplicity;
    } else {
      gap = std::max(gap, l);
    }
  }
  res.gap = gap;
  return res;
}

// Spectral projection onto span{1, Y_1, ..., Y_{n+1}} in the quadrature
// inner product.  The span does not depend on theta; the argument is kept
// for interface symmetry with the operator constructors.
inline SpanProjector projection_P(const SphereGrid& grid, double /*theta*/) {
  return SpanProjector::sphere_tangent(grid);
}

struct SelfTestReport {
  double speed_variation_error = 0.0;  // FD of F(kappa) vs umbilic formula, relative
  double area_variation_error = 0.0;   // FD of area vs int E_1 w dmu, relative
};

// (i) d/de F(kappa(e w)) at e = 0 against
//     -F'(kappa_0) (Delta_{g0} w + n cot^2(theta) w + n w),  Delta_{g0} = sin^{-2} Delta_{S^n};
// (ii) d/de Area(e w) against int E_1 w dmu_0.
inline SelfTestReport linearization_selftest(const SphereGrid& grid, double theta,
                                             const SpeedSpec& speed, const ScalarField& w) {
  const int n = grid.dim();
  require_speed_admissible(speed, n, theta);
  const double eps = 1e-5;
  const double cot = std::cos(theta) / std::sin(theta);
  const double s2 = std::sin(theta) * std::sin(theta);
  const double fp = speed_fprime_umbilic(speed, n, cot);

  ScalarField up(grid.node_count()), um(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) {
    up[i] = eps * w[i];
    um[i] = -eps * w[i];
  }
  GraphFunction gp(grid, theta, up), gm(grid, theta, um);
  const auto fldp = geometry_fields(gp);
  const auto fldm = geometry_fields(gm);
  const ScalarField Fp = speed_field(fldp, speed);
  const ScalarField Fm = speed_field(fldm, speed);

  const ScalarField lap = grid.laplacian_sphere(w);
  SelfTestReport rep;
  double scale = 0.0, err = 0.0;
  for (int i = 0; i < grid.node_count(); ++i) {
    const double fd = (Fp[i] - Fm[i]) / (2.0 * eps);
    const double formula = -fp * (lap[i] / s2 + n * cot * cot * w[i] + n * w[i]);
    scale = std::max(scale, std::abs(formula));
    err = std::max(err, std::abs(fd - formula));
  }
  rep.speed_variation_error = err / std::max(scale, 1.0);

  const ScalarField ones(grid.node_count(), 1.0);
  const double area_p = grid.integrate(ones, fldp.mu);
  const double area_m = grid.integrate(ones, fldm.mu);
  const double fd_area = (area_p - area_m) / (2.0 * eps);
  // at the sphere E_1 = n cot(theta) and mu = sin^n(theta)
  const double analytic = n * cot * std::pow(std::sin(theta), n) * grid.integrate(w, ones);
  rep.area_variation_error =
      std::abs(fd_area - analytic) / std::max(1.0, std::abs(analytic));
  return rep;
}

}  // namespace sphereflow
