#include <catch2/catch_amalgamated.hpp>

#include "sphereflow/geometry.hpp"
#include "sphereflow/weights.hpp"
#include "test_helpers.hpp"

using namespace sphereflow;
using testutil::random_band_field;

TEST_CASE("closed-form weight table", "[weights]") {
  // direct substitutions
  CHECK(xi_sphere_closed_form(1, kPi / 4, 1) == Catch::Approx(0.5));
  CHECK(xi_sphere_closed_form(1, 0.7, 0) == Catch::Approx(-0.5));
  CHECK(xi_sphere_closed_form(2, std::asin(std::sqrt(0.5)), 1) == Catch::Approx(0.0).margin(1e-15));
  for (int n : {1, 2})
    for (double theta : {0.4, kPi / 2, 2.2})
      CHECK(xi_sphere_closed_form(n, theta, n + 1) == 1.0);
  // cross-check Xi_1 = kappa/2 at theta = pi/4 for curves
  CHECK(xi_sphere_closed_form(1, kPi / 4, 1) ==
        Catch::Approx(0.5 * std::cos(kPi / 4) / std::sin(kPi / 4)));
}

TEST_CASE("assembled weight fields match the closed form on the sphere", "[weights]") {
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    for (double theta : {kPi / 6, kPi / 4, kPi / 3, kPi / 2, 2 * kPi / 3}) {
      const GraphFunction gf(grid, theta, ScalarField(grid.node_count(), 0.0));
      const auto f = geometry_fields(gf);
      for (int a = 0; a <= n + 1; ++a) {
        const auto xi = xi_a_field(f, a);
        const double expect = xi_sphere_closed_form(n, theta, a);
        const double scale = std::max(1.0, std::abs(expect));
        for (double x : xi) CHECK(std::abs(x - expect) / scale < 1e-6);
      }
    }
  }
}

TEST_CASE("weight fields on perturbed graphs obey the curvature identities", "[weights]") {
  // On surfaces in the round 3-sphere the total-curvature integrand reduces
  // through Gauss-Bonnet: Xi_0 = -E_1/3 identically, Xi_1 = (E_2 - 1)/3,
  // Xi_2 = E_1/3.  On curves: Xi_0 = -1/2 and Xi_1 = kappa/2.  These exact
  // identities exercise the full covariant assembly away from the sphere.
  SECTION("curves") {
    const auto grid = SphereGrid::build(1, 64);
    const double theta = 1.1;
    const auto u = random_band_field(grid, 55, 5, 0.05);
    const auto f = geometry_fields(GraphFunction(grid, theta, u));
    const auto xi0 = xi_a_field(f, 0);
    const auto xi1 = xi_a_field(f, 1);
    const auto E1 = f.esym_field(1);
    for (int i = 0; i < grid.node_count(); ++i) {
      CHECK(xi0[i] == Catch::Approx(-0.5).margin(1e-11));
      CHECK(xi1[i] == Catch::Approx(0.5 * E1[i]).margin(1e-11));
    }
  }
  SECTION("surfaces") {
    const auto grid = SphereGrid::build(2, 16);
    const double theta = 1.0;
    const auto u = random_band_field(grid, 56, 4, 0.04);
    const auto f = geometry_fields(GraphFunction(grid, theta, u));
    const auto xi0 = xi_a_field(f, 0);
    const auto xi1 = xi_a_field(f, 1);
    const auto xi2 = xi_a_field(f, 2);
    const auto E1 = f.esym_field(1);
    const auto E2 = f.esym_field(2);
    for (int i = 0; i < grid.node_count(); ++i) {
      CHECK(xi0[i] == Catch::Approx(-E1[i] / 3.0).margin(1e-9));
      CHECK(xi1[i] == Catch::Approx((E2[i] - 1.0) / 3.0).margin(1e-9));
      CHECK(xi2[i] == Catch::Approx(E1[i] / 3.0).margin(1e-9));
    }
  }
}

TEST_CASE("combined weight field", "[weights]") {
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const double theta = kPi / 3;
    SECTION("pure volume weight is the constant 1, n=" + std::to_string(n)) {
      const auto u = random_band_field(grid, 77 + n, 4, 0.04);
      const auto f = geometry_fields(GraphFunction(grid, theta, u));
      const auto xh = xi_hat_field(f, WeightSpec::basis(n, n + 1));
      for (double x : xh) CHECK(x == Catch::Approx(1.0).margin(1e-14));
    }
    SECTION("area weight on the sphere, n=" + std::to_string(n)) {
      const GraphFunction gf(grid, theta, ScalarField(grid.node_count(), 0.0));
      const auto f = geometry_fields(gf);
      const auto xh = xi_hat_field(f, WeightSpec::basis(n, n));
      const double expect = n * (std::cos(theta) / std::sin(theta)) / (n + 1);
      for (double x : xh) CHECK(x == Catch::Approx(expect).margin(1e-9));
    }
  }
}

TEST_CASE("degenerate weight combinations are rejected", "[weights]") {
  // Xi_n(X_0) vanishes exactly at the equator
  const auto grid = SphereGrid::build(1, 64);
  const GraphFunction gf(grid, kPi / 2, ScalarField(grid.node_count(), 0.0));
  const auto f = geometry_fields(gf);
  CHECK_THROWS_AS(xi_hat_field(f, WeightSpec::basis(1, 1)), DegenerateWeightError);
  // Xi_1(X_0) at theta_1 = arcsin(sqrt(1/2)) for surfaces
  const auto grid2 = SphereGrid::build(2, 16);
  const GraphFunction gf2(grid2, std::asin(std::sqrt(0.5)),
                          ScalarField(grid2.node_count(), 0.0));
  const auto f2 = geometry_fields(gf2);
  CHECK_THROWS_AS(xi_hat_field(f2, WeightSpec::basis(2, 1)), DegenerateWeightError);
}

TEST_CASE("weight fields commute with rotations of the parameter sphere", "[weights]") {
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const double theta = 1.2;
    const auto u = random_band_field(grid, 31 + n, 4, 0.04);
    const int nodes = grid.node_count();
    const int stride = n == 1 ? nodes : 2 * grid.resolution();
    const int shift = n == 1 ? 7 : 5;
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
      double worst = 0.0;
      for (int node = 0; node < nodes; ++node) {
        const int row = node / stride, col = node % stride;
        worst = std::max(worst, std::abs(xir[node] - xi[row * stride + (col + shift) % stride]));
      }
      CHECK(worst < 1e-9);
    }
  }
}

TEST_CASE("intrinsic-volume linearization constants", "[weights]") {
  SECTION("vanishing cases") {
    for (int n : {1, 2}) {
      CHECK(zhat_sphere(n, 0.8, 0) == 0.0);
      for (int a = 1; a <= n; ++a)
        CHECK(zhat_sphere(n, kPi / 2, a) == Catch::Approx(0.0).margin(1e-16));
      CHECK(zhat_sphere(n, kPi / 2, n + 1) != 0.0);
    }
  }
  SECTION("consistency with the weight closed forms") {
    for (int n : {1, 2})
      for (double theta : {kPi / 6, kPi / 4, kPi / 3, 1.9, 2 * kPi / 3})
        for (int a = 0; a <= n + 1; ++a) {
          const auto spec = zhat_weightspec(n, a);
          double via_xi = 0.0;
          for (int c = 0; c <= n + 1; ++c)
            via_xi += spec.c[c] * xi_sphere_closed_form(n, theta, c);
          CHECK(via_xi == Catch::Approx(zhat_sphere(n, theta, a)).margin(1e-10));
        }
  }
}

TEST_CASE("weight spec validation", "[weights]") {
  CHECK_THROWS_AS(WeightSpec(Eigen::VectorXd::Zero(3)), ConfigError);
  Eigen::VectorXd c(3);
  c << 0.0, 1.0, 0.5;
  CHECK_NOTHROW(WeightSpec(c));
}
