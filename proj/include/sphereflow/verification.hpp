#pragma once

// Built-in invariant suite behind the `verify` subcommand: one named check
// per module property, each returning pass/fail with a measured defect.
// The quick tier keeps every check at desk scale; the full tier adds the
// long conservation and convergence runs.

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sphereflow/flow.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/grid.hpp"
#include "sphereflow/spherespace.hpp"
#include "sphereflow/stability.hpp"
#include "sphereflow/symfunc.hpp"
#include "sphereflow/volumes.hpp"
#include "sphereflow/weights.hpp"

namespace sphereflow {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace verification {

inline ScalarField random_band_field(const SphereGrid& grid, std::uint64_t seed, int max_degree,
                                     double amplitude) {
  XorShift64Star rng(seed);
  const int band = std::min(max_degree, grid.filter_band());
  std::vector<double> c(grid.mode_count(band), 0.0);
  for (size_t i = 1; i < c.size(); ++i) c[i] = rng.uniform(-1.0, 1.0);
  ScalarField f = grid.synthesize(c, band);
  const double m = grid.max_abs(f);
  for (auto& x : f) x *= amplitude / m;
  return f;
}

inline Eigen::VectorXd random_valid_b(int n, double theta, double bound, XorShift64Star& rng) {
  for (;;) {
    Eigen::VectorXd b(n + 2);
    for (int i = 0; i < n + 2; ++i) b[i] = rng.uniform(-bound, bound);
    if (SphereParams(b).valid(theta)) return b;
  }
}

inline Eigen::MatrixXd random_matrix_with_real_spectrum(int n, XorShift64Star& rng) {
  // symmetric-positive g times symmetric h has real spectrum
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return 0.5 * (m + m.transpose().eval());
}

using CheckFn = std::function<std::pair<bool, std::string>()>;

inline CheckResult run_check(const std::string& name, const CheckFn& fn) {
  CheckResult res;
  res.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto [pass, detail] = fn();
    res.pass = pass;
    res.detail = detail;
  } catch (const std::exception& e) {
    res.pass = false;
    res.detail = std::string("exception: ") + e.what();
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline std::string defect(double value, double tol) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << "defect " << value << " (tol " << tol << ")";
  return os.str();
}

// --- symfunc ---------------------------------------------------------------

inline std::pair<bool, std::string> check_symfunc_identities() {
  XorShift64Star rng(2024);
  double worst = 0.0;
  for (int n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 25; ++trial) {
      Eigen::MatrixXd g = random_matrix_with_real_spectrum(n, rng);
      g = g * g.transpose() + Eigen::MatrixXd::Identity(n, n);  // SPD
      const Eigen::MatrixXd h = random_matrix_with_real_spectrum(n, rng);
      const Eigen::MatrixXd W = g.inverse() * h;
      const Eigen::VectorXd E = elementary_symmetric_of_matrix(W);
      for (int a = 0; a <= n; ++a) {
        const Eigen::MatrixXd D = esym_derivative_tensor(W, a);
        // index-raising symmetry: g D g^{-1} = D^T for g-self-adjoint W
        worst = std::max(worst, (g * D * g.inverse() - D.transpose()).cwiseAbs().maxCoeff());
        // degree-lowering recurrence
        if (a < n) {
          const Eigen::MatrixXd Dnext = esym_derivative_tensor(W, a + 1);
          const Eigen::MatrixXd rec = E[a] * Eigen::MatrixXd::Identity(n, n) - D * W.transpose();
          worst = std::max(worst, (Dnext - rec).cwiseAbs().maxCoeff());
          // Euler homogeneity  h^i_q dE_{a+1}/dh^i_q = (a+1) E_{a+1}
          const double euler = (W.cwiseProduct(Dnext)).sum();
          worst = std::max(worst, std::abs(euler - (a + 1) * E[a + 1]));
        }
        // index switch  h_{ij} dE_a/dh^k_j = h_{kj} dE_a/dh^i_j
        const Eigen::MatrixXd hl = g * W;  // h_{ij}
        const Eigen::MatrixXd lhs = hl * D.transpose();
        worst = std::max(worst, (lhs - lhs.transpose()).cwiseAbs().maxCoeff());
      }
    }
  }
  return {worst <= 1e-10, defect(worst, 1e-10)};
}

inline std::pair<bool, std::string> check_speed_gradients() {
  XorShift64Star rng(77);
  double worst = 0.0;
  for (int n = 1; n <= 4; ++n) {
    std::vector<SpeedSpec> specs;
    for (int k = 1; k <= n; ++k) {
      specs.push_back({SpeedKind::kESym, k, 1.0});
      specs.push_back({SpeedKind::kESymRoot, k, 1.0});
      if (k < n) specs.push_back({SpeedKind::kQuotient, k, 1.0});
    }
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd kap(n);
      for (int i = 0; i < n; ++i) kap[i] = rng.uniform(0.2, 2.0);
      for (const auto& spec : specs) {
        const auto [f, df] = speed_and_gradient(spec, kap);
        for (int i = 0; i < n; ++i) {
          Eigen::VectorXd kp = kap, km = kap;
          kp[i] += 1e-6;
          km[i] -= 1e-6;
          const double fd = (speed_value(spec, kp) - speed_value(spec, km)) / 2e-6;
          worst = std::max(worst, std::abs(fd - df[i]) / std::max(1.0, std::abs(df[i])));
        }
      }
    }
  }
  return {worst <= 1e-6, defect(worst, 1e-6)};
}

// --- grid --------------------------------------------------------------------

inline std::pair<bool, std::string> check_grid_quadrature() {
  double worst = 0.0;
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    double ws = 0.0;
    for (int i = 0; i < grid.node_count(); ++i) ws += grid.weight(i);
    worst = std::max(worst, std::abs(ws - grid.area()));
    const auto Y = grid.harmonics_first_order();
    const ScalarField ones(grid.node_count(), 1.0);
    for (const auto& y : Y) {
      worst = std::max(worst, std::abs(grid.integrate(y, ones)));
      ScalarField y2(grid.node_count());
      for (int i = 0; i < grid.node_count(); ++i) y2[i] = y[i] * y[i];
      worst = std::max(worst, std::abs(grid.integrate(y2, ones) - grid.area() / (n + 2)));
    }
  }
  return {worst <= 1e-10, defect(worst, 1e-10)};
}

inline std::pair<bool, std::string> check_grid_laplacian() {
  double worst = 0.0;
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 24);
    const int band = grid.band();
    for (int mode = 0; mode < grid.mode_count(band); ++mode) {
      const int l = grid.mode_degree(mode, band);
      if (l > band / 2) continue;
      const auto f = grid.mode_field(mode, band);
      const auto lap = grid.laplacian_sphere(f);
      const double expect = -double(l) * (l + n - 1);
      for (int i = 0; i < grid.node_count(); ++i) {
        const double ref = expect * f[i];
        worst = std::max(worst, std::abs(lap[i] - ref) / std::max(1.0, std::abs(expect)));
      }
    }
  }
  return {worst <= 1e-6, defect(worst, 1e-6)};
}

inline std::pair<bool, std::string> check_grid_determinism() {
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const auto f = random_band_field(grid, 5, grid.filter_band(), 1.0);
    const auto a1 = grid.analyze(f);
    const auto a2 = grid.analyze(f);
    if (a1 != a2) return {false, "analysis not bit-identical"};
    const auto s1 = grid.synthesize(a1, grid.band(), 1, 0);
    const auto s2 = grid.synthesize(a2, grid.band(), 1, 0);
    if (s1 != s2) return {false, "synthesis not bit-identical"};
    const ScalarField ones(grid.node_count(), 1.0);
    if (grid.integrate(f, ones) != grid.integrate(f, ones))
      return {false, "integration not bit-identical"};
  }
  return {true, "bit-identical"};
}

inline std::pair<bool, std::string> check_grid_covariant() {
  double worst = 0.0;
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    // round metric on S_theta
    const double theta = kPi / 3;
    Tensor02Field metric(n, grid.node_count());
    const double s2 = std::sin(theta) * std::sin(theta);
    for (int node = 0; node < grid.node_count(); ++node) {
      if (n == 1) {
        metric.at(node, 0, 0) = s2;
      } else {
        const double sp = std::sin(grid.coord(node, 1));
        metric.at(node, 0, 0) = s2 * sp * sp;
        metric.at(node, 1, 1) = s2;
      }
    }
    // hessian of a constant vanishes
    const ScalarField cf(grid.node_count(), 2.75);
    const auto hc = grid.covariant_hessian(cf, metric);
    for (int node = 0; node < grid.node_count(); ++node)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(hc.at(node, i, j)));
    // second covariant derivative of the identity tensor vanishes
    Tensor11Field id(n, grid.node_count());
    for (int node = 0; node < grid.node_count(); ++node)
      for (int i = 0; i < n; ++i) id.at(node, i, i) = 1.0;
    const auto B = grid.covariant_second_derivative(id, metric);
    for (int node = 0; node < grid.node_count(); ++node)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(B.at(node, i, j)));
  }
  return {worst <= 1e-9, defect(worst, 1e-9)};
}

// --- geometry ---------------------------------------------------------------

inline std::pair<bool, std::string> check_geometry_base_sphere() {
  double worst = 0.0;
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    for (double theta : {kPi / 6, kPi / 3, kPi / 2, 2 * kPi / 3}) {
      const GraphFunction gf(grid, theta, ScalarField(grid.node_count(), 0.0));
      const auto f = geometry_fields(gf);
      const double cot = std::cos(theta) / std::sin(theta);
      for (int node = 0; node < grid.node_count(); ++node) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            worst = std::max(worst,
                             std::abs(f.h.at(node, i, j) - cot * f.g.at(node, i, j)));
        worst = std::max(worst, std::abs(f.L[node] - 1.0));
        for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(f.kappa.at(node, i) - cot));
      }
    }
  }
  return {worst <= 1e-9, defect(worst, 1e-9)};
}

inline std::pair<bool, std::string> check_geometry_normal(std::uint64_t seed = 11) {
  double worst = 0.0;
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const double theta = 1.1;
    const auto u = random_band_field(grid, seed + n, 4, 0.05);
    const GraphFunction gf(grid, theta, u);
    const auto f = geometry_fields(gf);
    const auto ud = grid.u_derivatives(u, 1);
    for (int node = 0; node < grid.node_count(); ++node) {
      double nn = 0.0, nx = 0.0;
      for (int A = 0; A < n + 2; ++A) {
        nn += f.nu[node][A] * f.nu[node][A];
        nx += f.nu[node][A] * f.X[node][A];
      }
      worst = std::max(worst, std::abs(std::sqrt(nn) - 1.0));
      worst = std::max(worst, std::abs(nx));
      // gbar(gamma_dot, nu) = 1/L
      const double q = theta + u[node];
      double gd_dot_nu = 0.0;
      for (int A = 0; A <= n; ++A) {
        // gamma_dot = (c_A cos q, -sin q) and X = (c_A sin q, cos q)
        gd_dot_nu += (f.X[node][A] / std::sin(q)) * std::cos(q) * f.nu[node][A];
      }
      gd_dot_nu += -std::sin(q) * f.nu[node][n + 1];
      worst = std::max(worst, std::abs(gd_dot_nu - 1.0 / f.L[node]));
      (void)ud;
    }
  }
  return {worst <= 1e-9, defect(worst, 1e-9)};
}

// --- weights ----------------------------------------------------------------

inline std::pair<bool, std::string> check_weights_closed_form() {
  double worst = 0.0;
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    for (double theta : {kPi / 6, kPi / 4, kPi / 3, kPi / 2, 2 * kPi / 3}) {
      const GraphFunction gf(grid, theta, ScalarField(grid.node_count(), 0.0));
      const auto f = geometry_fields(gf);
      for (int a = 0; a <= n + 1; ++a) {
        const auto xi = xi_a_field(f, a);
        const double expect = xi_sphere_closed_form(n, theta, a);
        const double scale = std::max(1.0, std::abs(expect));
        for (double x : xi) worst = std::max(worst, std::abs(x - expect) / scale);
      }
    }
  }
  return {worst <= 1e-6, defect(worst, 1e-6)};
}

inline std::pair<bool, std::string> check_weights_rotation() {
  double worst = 0.0;
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const double theta = 1.2;
    const auto u = random_band_field(grid, 31 + n, 4, 0.04);
    const int nodes = grid.node_count();
    const int shift = n == 1 ? 7 : 5;  // nodes along p_1
    const int stride = n == 1 ? nodes : grid.resolution() * 2;
    ScalarField ur(nodes);
    for (int node = 0; node < nodes; ++node) {
      const int row = node / stride, col = node % stride;
      ur[node] = u[row * stride + (col + shift) % stride];
    }
    const auto f = geometry_fields(GraphFunction(grid, theta, u));
    const auto fr = geometry_fields(GraphFunction(grid, theta, ur));
    for (int a = 0; a <= n + 1; ++a) {
      const auto xi = xi_a_field(f, a);
      const auto xir = xi_a_field(fr, a);
      for (int node = 0; node < nodes; ++node) {
        const int row = node / stride, col = node % stride;
        const double rotated = xi[row * stride + (col + shift) % stride];
        worst = std::max(worst, std::abs(xir[node] - rotated));
      }
    }
  }
  return {worst <= 1e-9, defect(worst, 1e-9)};
}

inline std::pair<bool, std::string> check_weights_zhat() {
  double worst = 0.0;
  for (int n : {1, 2})
    for (double theta : {kPi / 6, kPi / 4, kPi / 3, 2 * kPi / 3})
      for (int a = 0; a <= n + 1; ++a) {
        const auto spec = zhat_weightspec(n, a);
        double via_xi = 0.0;
        for (int c = 0; c <= n + 1; ++c)
          via_xi += spec.c[c] * xi_sphere_closed_form(n, theta, c);
        worst = std::max(worst, std::abs(via_xi - zhat_sphere(n, theta, a)));
      }
  return {worst <= 1e-10, defect(worst, 1e-10)};
}

// --- volumes ----------------------------------------------------------------

inline std::pair<bool, std::string> check_volumes_closed_form() {
  double worst = 0.0;
  {
    const auto grid = SphereGrid::build(1, 64);
    for (double theta : {kPi / 4, kPi / 3, kPi / 2, 2.0}) {
      const GraphFunction gf(grid, theta, ScalarField(grid.node_count(), 0.0));
      const auto rep = mixed_volumes(gf, geometry_fields(gf));
      worst = std::max(worst, std::abs(rep.v[2] - 2 * kPi * (1 - std::cos(theta))));
      worst = std::max(worst, std::abs(rep.v[1] - kPi * std::sin(theta)));
      worst = std::max(worst, std::abs(rep.v[0] - kPi * std::cos(theta)));
    }
  }
  {
    const auto grid = SphereGrid::build(2, 16);
    for (double theta : {kPi / 4, kPi / 3, kPi / 2}) {
      const GraphFunction gf(grid, theta, ScalarField(grid.node_count(), 0.0));
      const auto rep = mixed_volumes(gf, geometry_fields(gf));
      const double area = 4 * kPi * std::sin(theta) * std::sin(theta);
      worst = std::max(worst, std::abs(rep.v[2] - area / 3.0));
      worst = std::max(worst, std::abs(rep.area - area));
    }
  }
  return {worst <= 1e-9, defect(worst, 1e-9)};
}

inline std::pair<bool, std::string> check_volumes_linearization(int pairs = 4) {
  double worst = 0.0;
  XorShift64Star rng(404);
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const double theta = kPi / 3;
    for (int trial = 0; trial < pairs; ++trial) {
      const auto u = random_band_field(grid, rng.next_u64(), 4, 0.03);
      const auto w = random_band_field(grid, rng.next_u64(), 5, 1.0);
      const GraphFunction gf(grid, theta, u);
      for (int a = 0; a <= n + 1; ++a) {
        const auto dd = vhat_directional_derivative(gf, w, WeightSpec::basis(n, a));
        worst = std::max(worst,
                         std::abs(dd.fd - dd.analytic) / std::max(1.0, std::abs(dd.analytic)));
      }
    }
  }
  return {worst <= 1e-4, defect(worst, 1e-4)};
}

// --- sphere space -----------------------------------------------------------

inline std::pair<bool, std::string> check_spherespace(int samples) {
  double worst_param = 0.0, worst_plane = 0.0, worst_tangent = 0.0;
  XorShift64Star rng(909);
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const double theta = kPi / 3;
    for (int trial = 0; trial < samples; ++trial) {
      const Eigen::VectorXd b = random_valid_b(n, theta, 0.1 / std::sqrt(double(n + 2)), rng);
      const auto gf = sphere_graph(SphereParams(b), theta, grid);
      worst_plane = std::max(worst_plane, plane_residual(SphereParams(b), gf));
      const auto fit = fit_sphere(gf);
      worst_param = std::max(worst_param, (fit.params.b - b).cwiseAbs().maxCoeff());
    }
    worst_tangent = std::max(worst_tangent, tangent_linearization_check(theta, grid).max_error);
  }
  const bool pass = worst_param <= 1e-8 && worst_plane <= 1e-9 && worst_tangent <= 1e-6;
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << "param " << worst_param << ", plane " << worst_plane << ", tangent "
     << worst_tangent;
  return {pass, os.str()};
}

inline std::pair<bool, std::string> check_flow_stationarity(int samples) {
  double worst = 0.0;
  XorShift64Star rng(1212);
  SpeedSpec e1{SpeedKind::kESym, 1, 1.0};
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 24);
    const double theta = kPi / 3;
    const auto spec = WeightSpec::basis(n, n + 1);
    for (int trial = 0; trial < samples; ++trial) {
      const Eigen::VectorXd b = random_valid_b(n, theta, 0.1 / std::sqrt(double(n + 2)), rng);
      const auto gf = sphere_graph(SphereParams(b), theta, grid);
      worst = std::max(worst, grid.max_abs(rhs(gf, e1, spec)));
    }
  }
  return {worst <= 1e-7, defect(worst, 1e-7)};
}

// --- stability ---------------------------------------------------------------

inline std::pair<bool, std::string> check_stability_spectrum() {
  double worst_analytic = 0.0, worst_numeric = 0.0;
  int bad_null = 0;
  SpeedSpec e1{SpeedKind::kESym, 1, 1.0};
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    for (double theta : {kPi / 3, kPi / 2}) {
      const double expect = -(n + 2) / (std::sin(theta) * std::sin(theta));
      const auto sA = spectrum(dg0_analytic(grid, theta, e1));
      worst_analytic = std::max(worst_analytic, std::abs(sA.gap - expect) / std::abs(expect));
      if (sA.null_multiplicity != n + 2) ++bad_null;
      const auto sN = spectrum(dg0_numeric(grid, theta, e1, WeightSpec::basis(n, n + 1)));
      worst_numeric = std::max(worst_numeric, std::abs(sN.gap - expect) / std::abs(expect));
      if (sN.null_multiplicity != n + 2) ++bad_null;
    }
  }
  const bool pass = worst_analytic <= 1e-6 && worst_numeric <= 1e-3 && bad_null == 0;
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << "analytic gap defect " << worst_analytic << ", numeric "
     << worst_numeric << ", null failures " << bad_null;
  return {pass, os.str()};
}

inline std::pair<bool, std::string> check_stability_selftest() {
  double worst = 0.0;
  SpeedSpec e1{SpeedKind::kESym, 1, 1.0};
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    for (double theta : {kPi / 3, kPi / 2}) {
      const auto w = random_band_field(grid, 99 + n, 5, 1.0);
      const auto rep = linearization_selftest(grid, theta, e1, w);
      worst = std::max({worst, rep.speed_variation_error, rep.area_variation_error});
    }
  }
  return {worst <= 1e-5, defect(worst, 1e-5)};
}

// --- flow -------------------------------------------------------------------

inline std::pair<bool, std::string> check_flow_conservation(bool quick) {
  double worst = 0.0;
  SpeedSpec e1{SpeedKind::kESym, 1, 1.0};
  for (int n : {1, 2}) {
    for (int a = 0; a <= n + 1; ++a) {
      FlowConfig cfg;
      cfg.n = n;
      cfg.theta = kPi / 3;
      cfg.resolution = quick ? (n == 1 ? 64 : 16) : (n == 1 ? 128 : 24);
      cfg.speed = e1;
      cfg.weights = WeightSpec::basis(n, a);
      cfg.initial.kind = InitialCondition::Kind::kHarmonicMix;
      cfg.initial.modes = {{2, n == 1 ? 0 : 1, 1.0}, {3, n == 1 ? 1 : 2, 0.5}};
      cfg.initial.amplitude = 0.03;
      cfg.t_end = quick ? 0.5 : 10.0;
      const auto trace = run_flow(cfg);
      const double v0 = trace.rows[0].vhat;
      for (const auto& row : trace.rows)
        worst = std::max(worst, std::abs(row.vhat - v0) / std::max(std::abs(v0), 1.0));
    }
  }
  return {worst <= 1e-5, defect(worst, 1e-5)};
}

inline std::pair<bool, std::string> check_flow_fixed_points() {
  double worst = 0.0;
  SpeedSpec e1{SpeedKind::kESym, 1, 1.0};
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const double theta = kPi / 3;
    const GraphFunction gf(grid, theta, ScalarField(grid.node_count(), 0.0));
    const auto f = geometry_fields(gf);
    const auto gh = speed_ghat(f, e1, WeightSpec::basis(n, n + 1));
    worst = std::max(worst, grid.max_abs(gh));
  }
  return {worst <= 1e-10, defect(worst, 1e-10)};
}

}  // namespace verification

inline std::vector<CheckResult> run_verification(bool quick) {
  using namespace verification;
  std::vector<CheckResult> results;
  auto add = [&](const std::string& name, const CheckFn& fn) {
    results.push_back(run_check(name, fn));
  };
  add("symfunc/derivative-identities", check_symfunc_identities);
  add("symfunc/speed-gradients", check_speed_gradients);
  add("grid/quadrature", check_grid_quadrature);
  add("grid/laplacian-spectrum", check_grid_laplacian);
  add("grid/determinism", check_grid_determinism);
  add("grid/covariant-calculus", check_grid_covariant);
  add("geometry/base-sphere", check_geometry_base_sphere);
  add("geometry/normal-frame", [] { return check_geometry_normal(); });
  add("weights/sphere-closed-form", check_weights_closed_form);
  add("weights/rotation-invariance", check_weights_rotation);
  add("weights/zhat-consistency", check_weights_zhat);
  add("volumes/sphere-closed-form", check_volumes_closed_form);
  add("volumes/linearization", [quick] { return check_volumes_linearization(quick ? 2 : 5); });
  add("spherespace/roundtrip", [quick] { return check_spherespace(quick ? 5 : 20); });
  add("flow/sphere-stationarity", [quick] { return check_flow_stationarity(quick ? 5 : 20); });
  add("flow/fixed-points", check_flow_fixed_points);
  add("stability/spectrum", check_stability_spectrum);
  add("stability/umbilic-linearization", check_stability_selftest);
  add("flow/conservation", [quick] { return check_flow_conservation(quick); });
  return results;
}

}  // namespace sphereflow
