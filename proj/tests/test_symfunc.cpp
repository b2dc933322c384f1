#include <catch2/catch_amalgamated.hpp>

#include "sphereflow/symfunc.hpp"
#include "test_helpers.hpp"

using namespace sphereflow;
using testutil::random_spd;
using testutil::random_symmetric;

TEST_CASE("elementary symmetric functions of constant vectors", "[symfunc]") {
  for (int n = 1; n <= 6; ++n) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd e = elementary_symmetric(ones);
    for (int a = 0; a <= n; ++a) CHECK(e[a] == Catch::Approx(binomial(n, a)).margin(1e-14));

    const double theta = 0.9;
    const double cot = std::cos(theta) / std::sin(theta);
    const Eigen::VectorXd kap = Eigen::VectorXd::Constant(n, cot);
    const Eigen::VectorXd ec = elementary_symmetric(kap);
    for (int a = 0; a <= n; ++a)
      CHECK(ec[a] == Catch::Approx(binomial(n, a) * std::pow(cot, a)).epsilon(1e-13));
  }
}

TEST_CASE("elementary symmetric direct expansion n=2", "[symfunc]") {
  Eigen::VectorXd kap(2);
  kap << 2.0, 3.0;
  const Eigen::VectorXd e = elementary_symmetric(kap);
  CHECK(e[0] == 1.0);
  CHECK(e[1] == Catch::Approx(5.0));
  CHECK(e[2] == Catch::Approx(6.0));
}

TEST_CASE("matrix route matches eigenvalue route", "[symfunc]") {
  XorShift64Star rng(42);
  for (int n = 1; n <= 5; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd W = random_symmetric(n, rng);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
      const Eigen::VectorXd via_eigs = elementary_symmetric(es.eigenvalues());
      const Eigen::VectorXd via_traces = elementary_symmetric_of_matrix(W);
      for (int a = 0; a <= n; ++a)
        CHECK(via_traces[a] == Catch::Approx(via_eigs[a]).margin(1e-11));
    }
  }
}

TEST_CASE("derivative tensor base cases", "[symfunc]") {
  XorShift64Star rng(7);
  const Eigen::MatrixXd W = random_symmetric(3, rng);
  CHECK(esym_derivative_tensor(W, 0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((esym_derivative_tensor(W, 1) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() ==
        0.0);

  Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(2, 2);
  D2.diagonal() << 2.0, 3.0;
  const Eigen::MatrixXd D = esym_derivative_tensor(D2, 2);
  CHECK(D(0, 0) == Catch::Approx(3.0));
  CHECK(D(1, 1) == Catch::Approx(2.0));
  CHECK(std::abs(D(0, 1)) < 1e-14);
}

TEST_CASE("derivative tensor identities on random matrices", "[symfunc]") {
  XorShift64Star rng(1234);
  for (int n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::MatrixXd g = random_spd(n, rng);
      const Eigen::MatrixXd h = random_symmetric(n, rng);
      const Eigen::MatrixXd W = g.inverse() * h;  // g-self-adjoint, real spectrum
      const Eigen::VectorXd E = elementary_symmetric_of_matrix(W);

      for (int a = 0; a <= n; ++a) {
        const Eigen::MatrixXd D = esym_derivative_tensor(W, a);

        // index raising/lowering: g D g^{-1} = D^T
        CHECK((g * D * g.inverse() - D.transpose()).cwiseAbs().maxCoeff() < 1e-10);

        // index switch: h_{ij} dE_a/dh^k_j symmetric in (i,k)
        const Eigen::MatrixXd hl = g * W;
        const Eigen::MatrixXd s = hl * D.transpose();
        CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-10);

        if (a < n) {
          // degree recurrence dE_{a+1}/dh = E_a I - h^j_k dE_a/dh^i_k
          const Eigen::MatrixXd Dn = esym_derivative_tensor(W, a + 1);
          const Eigen::MatrixXd rec =
              E[a] * Eigen::MatrixXd::Identity(n, n) - D * W.transpose();
          CHECK((Dn - rec).cwiseAbs().maxCoeff() < 1e-12);

          // Euler homogeneity
          const double euler = W.cwiseProduct(Dn).sum();
          CHECK(euler == Catch::Approx((a + 1) * E[a + 1]).margin(1e-10));
        }
      }

      // mixed-index symmetry in the flat case: symmetric W gives symmetric D
      const Eigen::MatrixXd Ws = random_symmetric(n, rng);
      for (int a = 0; a <= n; ++a) {
        const Eigen::MatrixXd D = esym_derivative_tensor(Ws, a);
        CHECK((D - D.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("speed values and gradients", "[symfunc]") {
  SECTION("E_1 is linear") {
    Eigen::VectorXd kap(3);
    kap << 0.3, 1.1, -0.4;
    SpeedSpec spec{SpeedKind::kESym, 1, 1.0};
    const auto [f, df] = speed_and_gradient(spec, kap);
    CHECK(f == Catch::Approx(1.0));
    for (int i = 0; i < 3; ++i) CHECK(df[i] == Catch::Approx(1.0));
  }
  SECTION("sqrt of Gauss curvature at the unit point") {
    Eigen::VectorXd kap(2);
    kap << 1.0, 1.0;
    SpeedSpec spec{SpeedKind::kESymRoot, 2, 1.0};
    const auto [f, df] = speed_and_gradient(spec, kap);
    CHECK(f == Catch::Approx(1.0));
    CHECK(df[0] == Catch::Approx(0.5));
    CHECK(df[1] == Catch::Approx(0.5));
  }
  SECTION("curvature quotient at the unit point") {
    Eigen::VectorXd kap(2);
    kap << 1.0, 1.0;
    SpeedSpec spec{SpeedKind::kQuotient, 1, 1.0};
    const auto [f, df] = speed_and_gradient(spec, kap);
    CHECK(f == Catch::Approx(0.5));
    CHECK(df[0] == Catch::Approx(0.25));
    CHECK(df[1] == Catch::Approx(0.25));
  }
}

TEST_CASE("speed gradient matches central differences", "[symfunc]") {
  XorShift64Star rng(99);
  for (int n = 1; n <= 4; ++n) {
    std::vector<SpeedSpec> specs;
    for (int k = 1; k <= n; ++k) {
      specs.push_back({SpeedKind::kESym, k, 1.0});
      specs.push_back({SpeedKind::kESymRoot, k, 1.0});
      if (k < n) specs.push_back({SpeedKind::kQuotient, k, 1.0});
    }
    for (int trial = 0; trial < 30; ++trial) {
      Eigen::VectorXd kap(n);
      for (int i = 0; i < n; ++i) kap[i] = rng.uniform(0.2, 2.0);
      for (const auto& spec : specs) {
        const auto [f, df] = speed_and_gradient(spec, kap);
        (void)f;
        for (int i = 0; i < n; ++i) {
          Eigen::VectorXd kp = kap, km = kap;
          kp[i] += 1e-6;
          km[i] -= 1e-6;
          const double fd = (speed_value(spec, kp) - speed_value(spec, km)) / 2e-6;
          CHECK(std::abs(fd - df[i]) / std::max(1.0, std::abs(df[i])) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("speed cone violations raise DomainError", "[symfunc]") {
  Eigen::VectorXd kap(2);
  kap << 1.0, -1.0;  // E_2 = -1
  CHECK_THROWS_AS(speed_value({SpeedKind::kESymRoot, 2, 1.0}, kap), DomainError);
  Eigen::VectorXd kap0(2);
  kap0 << 1.0, -1.0;  // E_1 = 0
  CHECK_THROWS_AS(speed_value({SpeedKind::kQuotient, 1, 1.0}, kap0), DomainError);
}

TEST_CASE("speed admissibility at the base sphere", "[symfunc]") {
  CHECK_NOTHROW(require_speed_admissible({SpeedKind::kESym, 1, 1.0}, 1, kPi / 3));
  // E_2^{1/2} needs positive Gauss curvature: fails past the equator
  CHECK_THROWS_AS(require_speed_admissible({SpeedKind::kESymRoot, 2, 1.0}, 2, 2 * kPi / 3),
                  DomainError);
}

TEST_CASE("speed spec parser", "[symfunc]") {
  CHECK(parse_speed("E_1").kind == SpeedKind::kESym);
  CHECK(parse_speed("E_2").k == 2);
  CHECK(parse_speed("E_2^{1/2}").kind == SpeedKind::kESymRoot);
  CHECK(parse_speed("E_2/E_1").kind == SpeedKind::kQuotient);
  CHECK(parse_speed("E_2/E_1").k == 1);
  CHECK_THROWS_AS(parse_speed("H"), ConfigError);
  CHECK_THROWS_AS(parse_speed("E_3/E_1"), ConfigError);
}
