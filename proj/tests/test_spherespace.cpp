#include <catch2/catch_amalgamated.hpp>

#include "sphereflow/geometry.hpp"
#include "sphereflow/spherespace.hpp"
#include "test_helpers.hpp"

using namespace sphereflow;
using testutil::random_band_field;
using testutil::random_valid_b;

TEST_CASE("zero parameters give the base sphere", "[spherespace]") {
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const auto gf = sphere_graph(SphereParams(Eigen::VectorXd::Zero(n + 2)), kPi / 3, grid);
    CHECK(grid.max_abs(gf.u) < 1e-14);
    CHECK(plane_residual(SphereParams(Eigen::VectorXd::Zero(n + 2)), gf) < 1e-12);
  }
}

TEST_CASE("height-only parameters give concentric spheres", "[spherespace]") {
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const double theta = kPi / 3, beta = 0.12;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 2);
    b[n + 1] = beta;
    const auto gf = sphere_graph(SphereParams(b), theta, grid);
    const double expect = std::acos(std::cos(theta) + beta) - theta;
    for (double x : gf.u) CHECK(x == Catch::Approx(expect).margin(1e-13));

    // radius formula: kappa = cot(arcsin(Rtilde))
    const double rt = std::sqrt(std::sin(theta) * std::sin(theta) -
                                2 * std::cos(theta) * beta - beta * beta);
    const auto f = geometry_fields(gf);
    const double expect_kappa = std::cos(std::asin(rt)) / rt;
    for (int node = 0; node < grid.node_count(); ++node)
      for (int i = 0; i < n; ++i)
        CHECK(f.kappa.at(node, i) == Catch::Approx(expect_kappa).margin(1e-10));
  }
}

TEST_CASE("random spheres are umbilic and satisfy their plane equation", "[spherespace]") {
  XorShift64Star rng(31415);
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 24);
    const double theta = kPi / 3;
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd b = random_valid_b(n, theta, 0.1 / std::sqrt(double(n + 2)), rng);
      const SphereParams params(b);
      const auto gf = sphere_graph(params, theta, grid);
      CHECK(plane_residual(params, gf) < 1e-9);
      CHECK(validate(gf).valid);
      const auto f = geometry_fields(gf);
      double kmin = 1e300, kmax = -1e300;
      for (int node = 0; node < grid.node_count(); ++node)
        for (int i = 0; i < n; ++i) {
          kmin = std::min(kmin, f.kappa.at(node, i));
          kmax = std::max(kmax, f.kappa.at(node, i));
        }
      CHECK(kmax - kmin < 1e-7);
    }
  }
}

TEST_CASE("non-spheres violate the plane equation", "[spherespace]") {
  const auto grid = SphereGrid::build(1, 64);
  const double theta = kPi / 3;
  Eigen::VectorXd b(3);
  b << 0.05, -0.02, 0.03;
  const SphereParams params(b);
  auto gf = sphere_graph(params, theta, grid);
  for (int i = 0; i < grid.node_count(); ++i)
    gf.u[i] += 0.01 * std::cos(2 * grid.coord(i, 0));
  CHECK(plane_residual(params, gf) > 1e-4);
}

TEST_CASE("parameter domain is enforced", "[spherespace]") {
  const auto grid = SphereGrid::build(1, 64);
  const double theta = kPi / 3;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  b[2] = 1.0 - std::cos(theta) + 0.01;  // beyond the height interval
  CHECK_THROWS_AS(u_from_params(SphereParams(b), theta, grid), DomainError);

  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(3);
  b2[2] = 0.2;
  const double limit = std::sqrt(1.0 / std::pow(std::cos(theta) + 0.2, 2) - 1.0);
  b2[0] = 1.01 * limit;
  CHECK_FALSE(SphereParams(b2).valid(theta));
  CHECK_THROWS_AS(u_from_params(SphereParams(b2), theta, grid), DomainError);
}

TEST_CASE("tangent space linearization", "[spherespace]") {
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    for (double theta : {kPi / 3, kPi / 2, 1.9}) {
      const auto rep = tangent_linearization_check(theta, grid);
      for (double e : rep.direction_error) CHECK(e < 1e-6);
      CHECK(rep.linearity_error < 1e-8);
    }
  }
}

TEST_CASE("sphere fitting round trip", "[spherespace]") {
  XorShift64Star rng(112358);
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const double theta = kPi / 3;
    for (int trial = 0; trial < (n == 1 ? 20 : 8); ++trial) {
      const Eigen::VectorXd b = random_valid_b(n, theta, 0.1 / std::sqrt(double(n + 2)), rng);
      const auto gf = sphere_graph(SphereParams(b), theta, grid);
      const auto fit = fit_sphere(gf);
      CHECK((fit.params.b - b).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(fit.residual < 1e-9);
    }
  }
}

TEST_CASE("fitting the zero graph returns zero parameters", "[spherespace]") {
  const auto grid = SphereGrid::build(1, 64);
  const auto fit =
      fit_sphere(GraphFunction(grid, kPi / 3, ScalarField(grid.node_count(), 0.0)));
  CHECK(fit.params.b.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.residual < 1e-12);
}

TEST_CASE("orthogonal perturbations persist in the fit residual", "[spherespace]") {
  const auto grid = SphereGrid::build(1, 64);
  const double theta = kPi / 3;
  Eigen::VectorXd b(3);
  b << 0.04, -0.06, 0.02;
  auto gf = sphere_graph(SphereParams(b), theta, grid);
  for (int i = 0; i < grid.node_count(); ++i)
    gf.u[i] += 1e-3 * std::cos(2 * grid.coord(i, 0));
  const auto fit = fit_sphere(gf);
  CHECK((fit.params.b - b).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(fit.residual == Catch::Approx(1e-3).epsilon(0.3));
}

TEST_CASE("fit iteration cap raises", "[spherespace]") {
  const auto grid = SphereGrid::build(1, 64);
  Eigen::VectorXd b(3);
  b << 0.05, 0.02, -0.04;
  const auto gf = sphere_graph(SphereParams(b), kPi / 3, grid);
  CHECK_THROWS_AS(fit_sphere(gf, 1), NoConvergenceError);
}
