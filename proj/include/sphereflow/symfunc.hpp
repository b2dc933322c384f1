#pragma once

// Elementary symmetric functions of principal curvatures, their derivative
// tensors with respect to the shape operator, and the pluggable speed
// functions F built from them.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "sphereflow/errors.hpp"

namespace sphereflow {

// E_0..E_n of kappa by the degree-graded product recurrence
// prod_i (1 + kappa_i t).  O(n^2), exact, no subset enumeration.
inline Eigen::VectorXd elementary_symmetric(const Eigen::VectorXd& kappa) {
  const int n = int(kappa.size());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n + 1);
  e[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    for (int a = i + 1; a >= 1; --a) e[a] += kappa[i] * e[a - 1];
  }
  return e;
}

// E_0..E_n of the eigenvalues of W via Newton's identities on power sums
// tr(W^k).  Works for any real matrix with real spectrum without an
// eigendecomposition.
inline Eigen::VectorXd elementary_symmetric_of_matrix(const Eigen::MatrixXd& W) {
  const int n = int(W.rows());
  std::vector<double> p(n + 1, 0.0);  // power sums, p[k] = tr(W^k)
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    M = M * W;
    p[k] = M.trace();
  }
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n + 1);
  e[0] = 1.0;
  for (int k = 1; k <= n; ++k) {
    double acc = 0.0;
    double sign = 1.0;
    for (int i = 1; i <= k; ++i) {
      acc += sign * e[k - i] * p[i];
      sign = -sign;
    }
    e[k] = acc / double(k);
  }
  return e;
}

// dE_a/dh^i_j as an n x n matrix D with D(i,j) = dE_a/dh^i_j, assembled
// from the alternating shape-operator power series
//   dE_a/dh^i_j = sum_{b=0}^{a-1} (-1)^b (W^b)_i^j E_{a-1-b}.
// W is stored with W(i,j) = h^i_j (row = upper index), hence the transpose
// on the powers.  a = 0 gives the zero matrix.
inline Eigen::MatrixXd esym_derivative_tensor(const Eigen::MatrixXd& W, int a) {
  const int n = int(W.rows());
  if (a < 0 || a > n) throw DomainError("esym_derivative_tensor: a out of range");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  if (a == 0) return D;
  const Eigen::VectorXd E = elementary_symmetric_of_matrix(W);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);  // W^b
  double sign = 1.0;
  for (int b = 0; b <= a - 1; ++b) {
    D += sign * E[a - 1 - b] * P.transpose();
    if (b < a - 1) P = P * W;
    sign = -sign;
  }
  return D;
}

// ---------------------------------------------------------------------------
// Speed functions

enum class SpeedKind {
  kESym,       // F = E_k
  kESymRoot,   // F = E_k^{1/k}
  kQuotient,   // F = E_{k+1} / E_k
};

struct SpeedSpec {
  SpeedKind kind = SpeedKind::kESym;
  int k = 1;
  double scale = 1.0;  // uniform prefactor; scale=2 realizes F -> 2F

  std::string name() const {
    switch (kind) {
      case SpeedKind::kESym:     return "E_" + std::to_string(k);
      case SpeedKind::kESymRoot: return "E_" + std::to_string(k) + "^{1/" + std::to_string(k) + "}";
      case SpeedKind::kQuotient: return "E_" + std::to_string(k + 1) + "/E_" + std::to_string(k);
    }
    return "?";
  }
};

inline SpeedSpec parse_speed(const std::string& text) {
  auto parse_k = [](const std::string& s, size_t pos) {
    size_t end = pos;
    while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) ++end;
    if (end == pos) throw ConfigError("speed: expected an index in '" + s + "'");
    return std::stoi(s.substr(pos, end - pos));
  };
  if (text.rfind("E_", 0) != 0) throw ConfigError("speed: unrecognized form '" + text + "'");
  const int k = parse_k(text, 2);
  const std::string rest = text.substr(2 + std::to_string(k).size());
  SpeedSpec spec;
  spec.k = k;
  if (rest.empty()) {
    spec.kind = SpeedKind::kESym;
  } else if (rest[0] == '^') {
    spec.kind = SpeedKind::kESymRoot;
  } else if (rest[0] == '/') {
    spec.kind = SpeedKind::kQuotient;
    spec.k = parse_k(rest, 3);  // "/E_<k>"
    if (spec.k + 1 != k) throw ConfigError("speed: quotient must be E_{k+1}/E_k, got '" + text + "'");
  } else {
    throw ConfigError("speed: unrecognized form '" + text + "'");
  }
  return spec;
}

namespace detail {
// E_{k} of kappa with component `skip` removed; gradient helper.
inline double esym_without(const Eigen::VectorXd& kappa, int order, int skip) {
  const int n = int(kappa.size());
  if (order < 0) return 0.0;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(order + 1);
  e[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    if (i == skip) continue;
    for (int a = order; a >= 1; --a) e[a] += kappa[i] * e[a - 1];
  }
  return e[order];
}

// gradient of E_k: dE_k/dkappa_a = E_{k-1}(kappa with a removed)
inline Eigen::VectorXd esym_gradient(const Eigen::VectorXd& kappa, int k) {
  const int n = int(kappa.size());
  Eigen::VectorXd g(n);
  for (int a = 0; a < n; ++a) g[a] = esym_without(kappa, k - 1, a);
  return g;
}
}  // namespace detail

constexpr double kSpeedConeFloor = 1e-12;

// F(kappa) and its exact gradient dF/dkappa.  DomainError when a root or
// quotient is evaluated outside its cone.
inline std::pair<double, Eigen::VectorXd> speed_and_gradient(const SpeedSpec& spec,
                                                             const Eigen::VectorXd& kappa) {
  const int n = int(kappa.size());
  if (spec.k < 1 || spec.k > n) throw ConfigError("speed: k must be in 1..n");
  const Eigen::VectorXd E = elementary_symmetric(kappa);
  switch (spec.kind) {
    case SpeedKind::kESym: {
      return {spec.scale * E[spec.k], spec.scale * detail::esym_gradient(kappa, spec.k)};
    }
    case SpeedKind::kESymRoot: {
      const double ek = E[spec.k];
      if (!(ek > kSpeedConeFloor)) throw DomainError("speed E_k^{1/k}: E_k not positive");
      const double f = std::pow(ek, 1.0 / spec.k);
      const Eigen::VectorXd dek = detail::esym_gradient(kappa, spec.k);
      return {spec.scale * f, (spec.scale * f / (spec.k * ek)) * dek};
    }
    case SpeedKind::kQuotient: {
      const double ek = E[spec.k];
      if (std::abs(ek) <= kSpeedConeFloor) throw DomainError("speed E_{k+1}/E_k: denominator vanishes");
      const double ekp = spec.k + 1 <= n ? E[spec.k + 1] : 0.0;
      const Eigen::VectorXd dek = detail::esym_gradient(kappa, spec.k);
      Eigen::VectorXd dekp = spec.k + 1 <= n ? detail::esym_gradient(kappa, spec.k + 1)
                                             : Eigen::VectorXd::Zero(n);
      return {spec.scale * ekp / ek, spec.scale * (dekp * ek - ekp * dek) / (ek * ek)};
    }
  }
  throw ConfigError("speed: bad kind");
}

inline double speed_value(const SpeedSpec& spec, const Eigen::VectorXd& kappa) {
  return speed_and_gradient(spec, kappa).first;
}

// dF/dkappa_1 at the umbilic point kappa = (c, ..., c).  The stability
// hypothesis requires this to be positive on the base sphere.
inline double speed_fprime_umbilic(const SpeedSpec& spec, int n, double c) {
  Eigen::VectorXd kap = Eigen::VectorXd::Constant(n, c);
  return speed_and_gradient(spec, kap).second[0];
}

inline void require_speed_admissible(const SpeedSpec& spec, int n, double theta) {
  const double c = std::cos(theta) / std::sin(theta);
  double fp;
  try {
    fp = speed_fprime_umbilic(spec, n, c);
  } catch (const DomainError& e) {
    throw DomainError(std::string("speed inadmissible at base sphere: ") + e.what());
  }
  if (!(fp > 0.0))
    throw DomainError("speed inadmissible: dF/dkappa_1 at the base sphere is not positive");
}

// ---------------------------------------------------------------------------
// Fixed-size scalar-generic kernels.  The weight-field assembly instantiates
// these with Jet<DIM> so the derivative tensors carry exact coordinate
// partials; N is the hypersurface dimension (1 or 2).

template <class S, int N>
void esym_of_matrix_t(const S W[N][N], S E[N + 1]) {
  S p[N + 1];  // power sums
  S M[N][N], Mn[N][N];
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) M[i][j] = W[i][j];
  for (int k = 1; k <= N; ++k) {
    S tr = M[0][0];
    for (int i = 1; i < N; ++i) tr += M[i][i];
    p[k] = tr;
    if (k < N) {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          S acc = M[i][0] * W[0][j];
          for (int m = 1; m < N; ++m) acc += M[i][m] * W[m][j];
          Mn[i][j] = acc;
        }
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) M[i][j] = Mn[i][j];
    }
  }
  E[0] = S(1.0);
  for (int k = 1; k <= N; ++k) {
    S acc = E[k - 1] * p[1];
    double sign = -1.0;
    for (int i = 2; i <= k; ++i) {
      acc += sign * (E[k - i] * p[i]);
      sign = -sign;
    }
    E[k] = (1.0 / double(k)) * acc;
  }
}

template <class S, int N>
void esym_derivative_tensor_t(const S W[N][N], const S E[N + 1], int a, S D[N][N]) {
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) D[i][j] = S(0.0);
  if (a <= 0) return;
  S P[N][N], Pn[N][N];  // W^b
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) P[i][j] = S(i == j ? 1.0 : 0.0);
  double sign = 1.0;
  for (int b = 0; b <= a - 1; ++b) {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) D[i][j] += sign * (P[j][i] * E[a - 1 - b]);
    if (b < a - 1) {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          S acc = P[i][0] * W[0][j];
          for (int m = 1; m < N; ++m) acc += P[i][m] * W[m][j];
          Pn[i][j] = acc;
        }
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) P[i][j] = Pn[i][j];
    }
    sign = -sign;
  }
}

}  // namespace sphereflow
