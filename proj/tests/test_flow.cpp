#include <catch2/catch_amalgamated.hpp>

#include "sphereflow/flow.hpp"
#include "sphereflow/io.hpp"
#include "sphereflow/stability.hpp"
#include "test_helpers.hpp"

using namespace sphereflow;
using testutil::random_band_field;
using testutil::random_valid_b;

namespace {
const SpeedSpec kE1{SpeedKind::kESym, 1, 1.0};
}

TEST_CASE("constrained speed vanishes on spheres", "[flow]") {
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 16);
    const double theta = kPi / 3;
    SECTION("base sphere, n=" + std::to_string(n)) {
      const GraphFunction gf(grid, theta, ScalarField(grid.node_count(), 0.0));
      const auto gh = speed_ghat(geometry_fields(gf), kE1, WeightSpec::basis(n, n + 1));
      CHECK(grid.max_abs(gh) < 1e-10);
    }
  }
}

TEST_CASE("rhs is the tilt times the constrained speed", "[flow]") {
  const auto grid = SphereGrid::build(1, 64);
  const double theta = kPi / 3;
  const auto u = random_band_field(grid, 8, 4, 0.04);
  const GraphFunction gf(grid, theta, u);
  const auto fields = geometry_fields(gf);
  const auto spec = WeightSpec::basis(1, 2);
  const auto gh = speed_ghat(fields, kE1, spec);
  const auto g = rhs(gf, kE1, spec);
  for (int i = 0; i < grid.node_count(); ++i)
    CHECK(g[i] == Catch::Approx(fields.L[i] * gh[i]).margin(1e-15));
}

TEST_CASE("spheres are stationary", "[flow]") {
  XorShift64Star rng(654);
  for (int n : {1, 2}) {
    const auto grid = SphereGrid::build(n, n == 1 ? 64 : 24);
    const double theta = kPi / 3;
    const auto spec = WeightSpec::basis(n, n + 1);
    for (int trial = 0; trial < (n == 1 ? 20 : 6); ++trial) {
      const Eigen::VectorXd b = random_valid_b(n, theta, 0.1 / std::sqrt(double(n + 2)), rng);
      const auto gf = sphere_graph(SphereParams(b), theta, grid);
      CHECK(grid.max_abs(rhs(gf, kE1, spec)) < 1e-7);
    }
  }
}

TEST_CASE("speed excess has the contracting sign", "[flow]") {
  const auto grid = SphereGrid::build(1, 64);
  const double theta = kPi / 2;
  ScalarField u(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) u[i] = 0.05 * std::cos(2 * grid.coord(i, 0));
  const GraphFunction gf(grid, theta, u);
  const auto fields = geometry_fields(gf);
  const auto gh = speed_ghat(fields, kE1, WeightSpec::basis(1, 2));
  // curvature excess at the outward bump (p=0) drives the speed negative
  CHECK(fields.kappa.at(0, 0) > 0.0);
  CHECK(gh[0] < 0.0);

  // refinement oracle: the same closed-form data on a twice-finer grid
  const auto fine = SphereGrid::build(1, 128);
  ScalarField uf(fine.node_count());
  for (int i = 0; i < fine.node_count(); ++i) uf[i] = 0.05 * std::cos(2 * fine.coord(i, 0));
  const auto ghf = speed_ghat(geometry_fields(GraphFunction(fine, theta, uf)), kE1,
                              WeightSpec::basis(1, 2));
  for (int i = 0; i < grid.node_count(); ++i) {
    CHECK(std::abs(gh[i] - ghf[2 * i]) / std::max(1.0, std::abs(ghf[2 * i])) < 1e-5);
  }
}

TEST_CASE("zero data is a fixed point of the integrator", "[flow]") {
  FlowConfig cfg;
  cfg.n = 1;
  cfg.theta = kPi / 3;
  cfg.resolution = 32;
  cfg.speed = kE1;
  cfg.weights = WeightSpec::basis(1, 2);
  cfg.initial.kind = InitialCondition::Kind::kField;
  cfg.initial.field_values = ScalarField(32, 0.0);
  cfg.t_end = 1.0;
  const auto trace = run_flow(cfg);
  CHECK(trace.status == FlowStatus::kConverged);
  CHECK(SphereGrid::build(1, 32).max_abs(trace.final_u) < 1e-14);
  for (const auto& row : trace.rows) CHECK(std::abs(row.vhat - trace.rows[0].vhat) < 1e-14);
}

TEST_CASE("sphere data stays put", "[flow]") {
  FlowConfig cfg;
  cfg.n = 1;
  cfg.theta = kPi / 3;
  cfg.resolution = 64;
  cfg.speed = kE1;
  cfg.weights = WeightSpec::basis(1, 2);
  cfg.initial.kind = InitialCondition::Kind::kSphere;
  Eigen::VectorXd b(3);
  b << 0.05, -0.03, 0.02;
  cfg.initial.sphere_b = b;
  cfg.t_end = 0.5;
  const auto trace = run_flow(cfg);
  const auto grid = SphereGrid::build(1, 64);
  const auto ub = sphere_graph(SphereParams(b), cfg.theta, grid).u;
  // the integrator may stop early once the speed is below threshold
  double drift = 0.0;
  for (size_t i = 0; i < ub.size(); ++i)
    drift = std::max(drift, std::abs(trace.final_u[i] - grid.filter(ub)[i]));
  CHECK(drift < 1e-6);
}

TEST_CASE("perturbations converge to a nearby sphere at the predicted rate", "[flow][slow]") {
  FlowConfig cfg;
  cfg.n = 1;
  cfg.theta = kPi / 2;
  cfg.resolution = 64;
  cfg.speed = kE1;
  cfg.weights = WeightSpec::basis(1, 2);
  cfg.initial.kind = InitialCondition::Kind::kHarmonicMix;
  cfg.initial.modes = {{2, 0, 1.0}};
  cfg.initial.amplitude = 0.05;
  cfg.t_end = 8.0;
  const auto trace = run_flow(cfg);
  CHECK(trace.status == FlowStatus::kConverged);

  // conservation along the trajectory
  double drift = 0.0;
  for (const auto& row : trace.rows)
    drift = std::max(drift, std::abs(row.vhat - trace.rows[0].vhat));
  CHECK(drift / std::abs(trace.rows[0].vhat) < 1e-5);

  // weighted-mean constraint holds at every step
  CHECK(trace.max_weighted_mean < 1e-12);

  // decay rate of the non-sphere residual: (n+2) F' / sin^2(theta) = 3
  const auto dec = measure_decay(trace);
  CHECK(dec.rate == Catch::Approx(3.0).epsilon(0.1));
  CHECK(dec.r_squared > 0.999);

  // the limit is a sphere
  const auto grid = SphereGrid::build(1, 64);
  const auto fit = fit_sphere(GraphFunction(grid, cfg.theta, trace.final_u));
  CHECK(fit.residual < 1e-6);
}

TEST_CASE("decay measurement on synthetic data", "[flow]") {
  FlowTrace trace;
  trace.n = 1;
  for (int i = 0; i <= 400; ++i) {
    TraceRow row;
    row.t = i * 0.02;
    row.res_nonsphere = 1e-2 * std::exp(-3.0 * row.t);
    trace.rows.push_back(row);
  }
  const auto dec = measure_decay(trace);
  CHECK(dec.rate == Catch::Approx(3.0).margin(1e-6));
  CHECK(dec.r_squared == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("decay measurement refuses flat traces", "[flow]") {
  FlowTrace trace;
  trace.n = 1;
  for (int i = 0; i <= 100; ++i) {
    TraceRow row;
    row.t = i * 0.05;
    row.res_nonsphere = 3e-5;  // stationary sphere: nothing decays
    trace.rows.push_back(row);
  }
  CHECK_THROWS_AS(measure_decay(trace), InsufficientDataError);
}

TEST_CASE("flows conserve the selected combination", "[flow][slow]") {
  for (int n : {1, 2}) {
    for (int a = 0; a <= n + 1; ++a) {
      FlowConfig cfg;
      cfg.n = n;
      cfg.theta = kPi / 3;
      cfg.resolution = n == 1 ? 64 : 16;
      cfg.speed = kE1;
      cfg.weights = WeightSpec::basis(n, a);
      cfg.initial.kind = InitialCondition::Kind::kHarmonicMix;
      cfg.initial.modes = {{2, n == 1 ? 0 : 1, 1.0}, {3, n == 1 ? 1 : 2, 0.5}};
      cfg.initial.amplitude = 0.03;
      cfg.t_end = 0.5;
      const auto trace = run_flow(cfg);
      const double v0 = trace.rows[0].vhat;
      double drift = 0.0;
      for (const auto& row : trace.rows) drift = std::max(drift, std::abs(row.vhat - v0));
      CHECK(drift / std::max(1.0, std::abs(v0)) < 1e-7);
      CHECK(trace.max_weighted_mean < 1e-12);
    }
  }
}

TEST_CASE("graphs leaving the safe region stop with Degenerate status", "[flow]") {
  FlowConfig cfg;
  cfg.n = 1;
  cfg.theta = 0.4;
  cfg.resolution = 64;
  cfg.speed = kE1;
  cfg.weights = WeightSpec::basis(1, 2);
  // valid as a graph (margin > 0) but beyond the integrator's 0.98 guard
  const auto grid = SphereGrid::build(1, 64);
  ScalarField u(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) u[i] = 0.99 * 0.4 * std::cos(grid.coord(i, 0));
  cfg.initial.kind = InitialCondition::Kind::kField;
  cfg.initial.field_values = u;
  cfg.t_end = 1.0;
  const auto trace = run_flow(cfg);
  CHECK(trace.status == FlowStatus::kDegenerate);
}

TEST_CASE("degenerate weight at the equator is rejected up front", "[flow]") {
  FlowConfig cfg;
  cfg.n = 1;
  cfg.theta = kPi / 2;
  cfg.resolution = 32;
  cfg.speed = kE1;
  cfg.weights = WeightSpec::basis(1, 1);  // area weight vanishes at the equator
  cfg.initial.kind = InitialCondition::Kind::kHarmonicMix;
  cfg.initial.modes = {{2, 0, 1.0}};
  cfg.initial.amplitude = 0.02;
  cfg.t_end = 0.5;
  CHECK_THROWS_AS(run_flow(cfg), DegenerateWeightError);
}

TEST_CASE("identical configurations produce identical traces", "[flow]") {
  FlowConfig cfg;
  cfg.n = 1;
  cfg.theta = kPi / 3;
  cfg.resolution = 32;
  cfg.speed = kE1;
  cfg.weights = WeightSpec::basis(1, 2);
  cfg.initial.kind = InitialCondition::Kind::kHarmonicMix;
  cfg.initial.seed = 2024;
  cfg.initial.amplitude = 0.03;
  cfg.t_end = 0.3;
  const auto t1 = run_flow(cfg);
  const auto t2 = run_flow(cfg);
  CHECK(trace_to_csv(t1) == trace_to_csv(t2));
}

TEST_CASE("renormalization pins the conserved value exactly", "[flow]") {
  FlowConfig cfg;
  cfg.n = 1;
  cfg.theta = kPi / 3;
  cfg.resolution = 32;
  cfg.speed = kE1;
  cfg.weights = WeightSpec::basis(1, 2);
  cfg.initial.kind = InitialCondition::Kind::kHarmonicMix;
  cfg.initial.modes = {{2, 0, 1.0}};
  cfg.initial.amplitude = 0.04;
  cfg.t_end = 0.2;
  cfg.renormalize = true;
  const auto trace = run_flow(cfg);
  const double v0 = trace.rows[0].vhat;
  for (const auto& row : trace.rows) CHECK(std::abs(row.vhat - v0) / std::abs(v0) < 1e-12);
}
