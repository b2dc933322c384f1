#pragma once

// The constrained flow: nonlocal speed G_hat, graph-height right-hand side
// G(u) = L(u) G_hat(X_u), adaptive explicit time integration with a
// parabolic step cap, trajectory tracing, and decay-rate measurement.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sphereflow/errors.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/grid.hpp"
#include "sphereflow/spherespace.hpp"
#include "sphereflow/symfunc.hpp"
#include "sphereflow/util.hpp"
#include "sphereflow/volumes.hpp"
#include "sphereflow/weights.hpp"

namespace sphereflow {

// F(kappa) per node.
inline ScalarField speed_field(const GeometryFields& fields, const SpeedSpec& spec) {
  const auto& grid = *fields.grid;
  const int n = grid.dim();
  ScalarField out(grid.node_count());
  Eigen::VectorXd kap(n);
  for (int node = 0; node < grid.node_count(); ++node) {
    for (int i = 0; i < n; ++i) kap[i] = fields.kappa.at(node, i);
    out[node] = speed_value(spec, kap);
  }
  return out;
}

// G_hat = (int F Xi_hat dmu) / (int Xi_hat dmu) - F, pointwise.
inline ScalarField speed_ghat(const GeometryFields& fields, const SpeedSpec& speed,
                              const WeightSpec& spec) {
  const auto& grid = *fields.grid;
  const ScalarField F = speed_field(fields, speed);
  const ScalarField xh = xi_hat_field(fields, spec);
  const ScalarField ones(grid.node_count(), 1.0);
  const double area = grid.integrate(ones, fields.mu);
  const double denom = grid.integrate(xh, fields.mu);
  if (std::abs(denom) <= 1e-10 * area)
    throw DegenerateWeightError("integral of Xi_hat vanishes on this hypersurface");
  ScalarField fx(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) fx[i] = F[i] * xh[i];
  const double mean = grid.integrate(fx, fields.mu) / denom;
  ScalarField out(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) out[i] = mean - F[i];
  return out;
}

// G(u) = L(u) G_hat(X_u), pointwise; no band filtering here.
inline ScalarField rhs(const GraphFunction& gf, const SpeedSpec& speed, const WeightSpec& spec) {
  const auto fields = geometry_fields(gf);
  const ScalarField gh = speed_ghat(fields, speed, spec);
  ScalarField out(gf.grid->node_count());
  for (int i = 0; i < gf.grid->node_count(); ++i) out[i] = fields.L[i] * gh[i];
  return out;
}

// ---------------------------------------------------------------------------

struct InitialCondition {
  enum class Kind { kHarmonicMix, kSphere, kField };
  Kind kind = Kind::kHarmonicMix;

  // harmonic mix: explicit (degree, index, coefficient) triples and/or a
  // seeded random band; the result is rescaled to max-norm `amplitude`.
  struct Mode {
    int degree = 2;
    int index = 0;  // within-degree basis index (n=1: 0 cos, 1 sin; n=2: 0..2l)
    double coefficient = 1.0;
  };
  std::vector<Mode> modes;
  std::uint64_t seed = 0;  // 0 = no random part
  int min_degree = 2, max_degree = 3;
  double amplitude = 0.03;

  Eigen::VectorXd sphere_b;   // kind == kSphere
  ScalarField field_values;   // kind == kField
};

struct FlowConfig {
  int n = 1;
  double theta = kPi / 2;
  int resolution = 64;
  SpeedSpec speed;
  WeightSpec weights;
  InitialCondition initial;
  double t_end = 10.0;
  double dt_init = 1e-4;
  double safety = 0.9;
  int snapshot_stride = 0;  // 0 = no snapshots
  bool fit_spheres = false;
  bool renormalize = false;
  double atol = 1e-10;
  double rtol = 1e-9;
};

enum class FlowStatus { kConverged, kReachedTEnd, kDegenerate };

inline const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::kConverged: return "Converged";
    case FlowStatus::kReachedTEnd: return "ReachedTEnd";
    case FlowStatus::kDegenerate: return "Degenerate";
  }
  return "?";
}

struct TraceRow {
  double t = 0.0;
  double dt = 0.0;
  double max_u = 0.0;
  double max_ghat = 0.0;
  Eigen::VectorXd volumes;  // V_0..V_{n+1}
  double vhat = 0.0;
  double res_nonsphere = 0.0;  // ||(I-P) u||_inf
  Eigen::VectorXd fit_b;       // empty when fitting is off
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
};

struct FlowTrace {
  std::vector<TraceRow> rows;
  FlowStatus status = FlowStatus::kReachedTEnd;
  ScalarField final_u;
  double theta = 0.0;
  int n = 1;
  int resolution = 0;
  double max_weighted_mean = 0.0;  // max_t |mean_{Xi}(G_hat)| (quadrature consistency)
  int accepted_steps = 0;
  int rejected_steps = 0;
};

inline ScalarField build_initial_condition(const SphereGrid& grid, double theta,
                                           const InitialCondition& ic) {
  switch (ic.kind) {
    case InitialCondition::Kind::kField: {
      if (int(ic.field_values.size()) != grid.node_count())
        throw ConfigError("initial field size does not match grid");
      return ic.field_values;
    }
    case InitialCondition::Kind::kSphere: {
      SphereParams p(ic.sphere_b);
      return sphere_graph(p, theta, grid).u;
    }
    case InitialCondition::Kind::kHarmonicMix: {
      const int band = grid.filter_band();
      std::vector<double> coeff(grid.mode_count(band), 0.0);
      auto mode_slot = [&](int l, int idx) {
        if (grid.dim() == 1) return l == 0 ? 0 : 2 * l - 1 + idx;
        return l * l + idx;
      };
      for (const auto& m : ic.modes) {
        if (m.degree < 0 || m.degree > band) throw ConfigError("initial mode degree out of band");
        coeff[mode_slot(m.degree, m.index)] += m.coefficient;
      }
      if (ic.seed != 0) {
        XorShift64Star rng(ic.seed);
        for (int l = std::max(1, ic.min_degree); l <= std::min(band, ic.max_degree); ++l) {
          const int per_degree = grid.dim() == 1 ? 2 : 2 * l + 1;
          for (int idx = 0; idx < per_degree; ++idx)
            coeff[mode_slot(l, idx)] += rng.uniform(-1.0, 1.0);
        }
      }
      ScalarField u = grid.synthesize(coeff, band);
      const double m = grid.max_abs(u);
      if (m == 0.0) throw ConfigError("initial harmonic mix is identically zero");
      const double s = ic.amplitude / m;
      for (auto& x : u) x *= s;
      return u;
    }
  }
  throw ConfigError("bad initial condition");
}

namespace detail {

struct RhsEval {
  ScalarField phi;       // band-filtered G(u)
  double max_ghat = 0.0;
  double max_rhs = 0.0;  // ||G||_inf before filtering
  double weighted_mean = 0.0;
  VolumeReport vol;
};

class FlowProblem {
 public:
  FlowProblem(const SphereGrid& grid, const FlowConfig& cfg) : grid_(grid), cfg_(cfg) {}

  RhsEval eval(const ScalarField& u, bool with_diagnostics) const {
    GraphFunction gf(grid_, cfg_.theta, u);
    const auto diag = validate(gf);
    if (!(diag.max_u < 0.98 * gf.injectivity_bound()) || !(diag.max_grad < 0.98))
      throw DegenerateGraphError("graph invariants left the safe region");
    const auto fields = geometry_fields(gf);
    const ScalarField F = speed_field(fields, cfg_.speed);
    const ScalarField xh = xi_hat_field(fields, cfg_.weights);
    const ScalarField ones(grid_.node_count(), 1.0);
    const double area = grid_.integrate(ones, fields.mu);
    const double denom = grid_.integrate(xh, fields.mu);
    if (std::abs(denom) <= 1e-10 * area)
      throw DegenerateWeightError("integral of Xi_hat vanishes along the flow");
    ScalarField fx(grid_.node_count());
    for (int i = 0; i < grid_.node_count(); ++i) fx[i] = F[i] * xh[i];
    const double mean = grid_.integrate(fx, fields.mu) / denom;

    RhsEval ev;
    ScalarField g(grid_.node_count());
    double mg = 0.0, mr = 0.0;
    for (int i = 0; i < grid_.node_count(); ++i) {
      const double gh = mean - F[i];
      g[i] = fields.L[i] * gh;
      mg = std::max(mg, std::abs(gh));
      mr = std::max(mr, std::abs(g[i]));
    }
    ev.max_ghat = mg;
    ev.max_rhs = mr;
    ev.phi = grid_.filter(g);
    if (with_diagnostics) {
      ScalarField gx(grid_.node_count());
      for (int i = 0; i < grid_.node_count(); ++i) gx[i] = (mean - F[i]) * xh[i];
      ev.weighted_mean = grid_.integrate(gx, fields.mu) / std::abs(denom);
      ev.vol = mixed_volumes(gf, fields);
    }
    return ev;
  }

 private:
  const SphereGrid& grid_;
  const FlowConfig& cfg_;
};

}  // namespace detail

using SnapshotHook = std::function<void(int step, double t, const ScalarField& u)>;

inline FlowTrace run_flow(const FlowConfig& cfg, const SnapshotHook& on_snapshot = {}) {
  if (!(cfg.t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!(cfg.safety > 0.0 && cfg.safety <= 1.0)) throw ConfigError("safety must lie in (0, 1]");
  const SphereGrid grid = SphereGrid::build(cfg.n, cfg.resolution);
  require_speed_admissible(cfg.speed, cfg.n, cfg.theta);
  require_weight_nondegenerate(cfg.weights, cfg.n, cfg.theta);

  FlowTrace trace;
  trace.n = cfg.n;
  trace.theta = cfg.theta;
  trace.resolution = cfg.resolution;

  ScalarField u = build_initial_condition(grid, cfg.theta, cfg.initial);
  u = grid.filter(u);
  {
    GraphFunction gf(grid, cfg.theta, u);
    require_valid(gf);
  }

  const detail::FlowProblem problem(grid, cfg);
  const SpanProjector P = SpanProjector::sphere_tangent(grid);

  // parabolic stability cap: the linearized spectrum at the sphere reaches
  // about F'(kappa_0) Lambda_band / sin^2(theta); 2.5 is the explicit pair's
  // negative-real-axis stability extent, 1.5 a margin for nonlinear states.
  const double fprime =
      speed_fprime_umbilic(cfg.speed, cfg.n, std::cos(cfg.theta) / std::sin(cfg.theta));
  const int bf = grid.filter_band();
  const double lam_band = double(bf) * (bf + cfg.n - 1);
  const double s2 = std::sin(cfg.theta) * std::sin(cfg.theta);
  const double dt_cap = cfg.safety * 2.5 * s2 / (1.5 * fprime * lam_band);

  double t = 0.0;
  double dt = std::min(cfg.dt_init, dt_cap);
  detail::RhsEval k1;
  try {
    k1 = problem.eval(u, true);
  } catch (const DegenerateGraphError&) {
    trace.status = FlowStatus::kDegenerate;
    trace.final_u = u;
    return trace;
  }
  const double vhat0 = vhat(k1.vol, cfg.weights);

  auto append_row = [&](const detail::RhsEval& ev, double used_dt) {
    TraceRow row;
    row.t = t;
    row.dt = used_dt;
    row.max_u = grid.max_abs(u);
    row.max_ghat = ev.max_ghat;
    row.volumes = ev.vol.v;
    row.vhat = vhat(ev.vol, cfg.weights);
    row.res_nonsphere = grid.max_abs(P.complement(u));
    if (cfg.fit_spheres) {
      try {
        GraphFunction gf(grid, cfg.theta, u);
        const auto fit = fit_sphere(gf);
        row.fit_b = fit.params.b;
        row.fit_residual = fit.residual;
      } catch (const Error&) {
        row.fit_b = Eigen::VectorXd();
      }
    }
    trace.max_weighted_mean = std::max(trace.max_weighted_mean, std::abs(ev.weighted_mean));
    trace.rows.push_back(std::move(row));
  };

  append_row(k1, 0.0);
  if (on_snapshot) on_snapshot(0, t, u);

  const int nodes = grid.node_count();
  ScalarField u2(nodes), u3(nodes), unew(nodes);
  int step = 0;
  while (t < cfg.t_end - 1e-14) {
    dt = std::min({dt, dt_cap, cfg.t_end - t});
    bool accepted = false;
    detail::RhsEval k2, k3, k4;
    try {
      for (int i = 0; i < nodes; ++i) u2[i] = u[i] + 0.5 * dt * k1.phi[i];
      k2 = problem.eval(u2, false);
      for (int i = 0; i < nodes; ++i) u3[i] = u[i] + 0.75 * dt * k2.phi[i];
      k3 = problem.eval(u3, false);
      for (int i = 0; i < nodes; ++i)
        unew[i] = u[i] + dt * (2.0 * k1.phi[i] + 3.0 * k2.phi[i] + 4.0 * k3.phi[i]) / 9.0;
      k4 = problem.eval(unew, true);
    } catch (const DegenerateGraphError&) {
      trace.status = FlowStatus::kDegenerate;
      trace.final_u = u;
      return trace;
    }
    double err = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double e = dt * (-5.0 * k1.phi[i] / 72.0 + k2.phi[i] / 12.0 + k3.phi[i] / 9.0 -
                             k4.phi[i] / 8.0);
      err = std::max(err, std::abs(e));
    }
    const double tol = cfg.atol + cfg.rtol * grid.max_abs(u);
    if (err <= tol) {
      accepted = true;
      u.swap(unew);
      t += dt;
      k1 = k4;  // first-same-as-last
      ++step;
      ++trace.accepted_steps;
      if (cfg.renormalize) {
        // constant offset restoring the conserved value; one Newton step
        // with dV/dc = int Xi_hat L^{-1} dmu suffices at these drifts
        GraphFunction gf(grid, cfg.theta, u);
        const auto fields = geometry_fields(gf);
        const ScalarField xh = xi_hat_field(fields, cfg.weights);
        ScalarField integrand(nodes);
        for (int i = 0; i < nodes; ++i) integrand[i] = xh[i] / fields.L[i];
        const double dvdc = grid.integrate(integrand, fields.mu);
        const double v = vhat(mixed_volumes(gf, fields), cfg.weights);
        if (std::abs(dvdc) > 1e-12) {
          const double c = (vhat0 - v) / dvdc;
          for (auto& x : u) x += c;
          k1 = problem.eval(u, true);
        }
      }
      append_row(k1, dt);
      if (on_snapshot && cfg.snapshot_stride > 0 && step % cfg.snapshot_stride == 0)
        on_snapshot(step, t, u);
    } else {
      ++trace.rejected_steps;
    }
    const double grow = 0.9 * std::pow(tol / (err + 1e-300), 1.0 / 3.0);
    dt *= std::min(5.0, std::max(0.2, grow));
    if (accepted && k1.max_rhs <= 1e-10) {
      trace.status = FlowStatus::kConverged;
      trace.final_u = u;
      return trace;
    }
    if (dt < 1e-15) {
      trace.status = FlowStatus::kDegenerate;
      trace.final_u = u;
      return trace;
    }
  }
  trace.status = FlowStatus::kReachedTEnd;
  trace.final_u = u;
  return trace;
}

struct DecayMeasurement {
  double rate = 0.0;  // positive decay rate of ||(I-P) u||
  double window_start = 0.0, window_end = 0.0;
  double r_squared = 0.0;
  int rows_used = 0;
};

// Least-squares slope of log ||(I-P)u|| over the automatically selected
// linear window: rows with the residual in [1e-9, 1e-3], trimmed at both
// ends to the best linear fit.  The window must span at least two decades
// of decay; otherwise nothing is decaying and the measurement is refused.
inline DecayMeasurement measure_decay(const FlowTrace& trace) {
  std::vector<double> ts, ys;
  for (const auto& row : trace.rows) {
    if (row.res_nonsphere >= 1e-9 && row.res_nonsphere <= 1e-3) {
      ts.push_back(row.t);
      ys.push_back(std::log(row.res_nonsphere));
    }
  }
  const int total = int(ts.size());
  if (total < 20) throw InsufficientDataError("fewer than 20 rows in the decay band");
  double ymax = -1e300, ymin = 1e300;
  for (double y : ys) {
    ymax = std::max(ymax, y);
    ymin = std::min(ymin, y);
  }
  if (ymax - ymin < std::log(100.0))
    throw InsufficientDataError("residual does not decay across the window");

  auto fit_range = [&](int lo, int hi) {  // [lo, hi)
    const int m = hi - lo;
    double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
    for (int i = lo; i < hi; ++i) {
      st += ts[i];
      sy += ys[i];
      stt += ts[i] * ts[i];
      sty += ts[i] * ys[i];
      syy += ys[i] * ys[i];
    }
    const double denom = m * stt - st * st;
    const double slope = (m * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / m;
    double ss_res = 0.0, ss_tot = 0.0;
    const double mean_y = sy / m;
    for (int i = lo; i < hi; ++i) {
      const double pred = slope * ts[i] + intercept;
      ss_res += (ys[i] - pred) * (ys[i] - pred);
      ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return std::pair<double, double>(slope, r2);
  };

  DecayMeasurement best;
  best.r_squared = -1.0;
  const int min_rows = 20;
  for (int head : {0, total / 20, total / 10, total / 5}) {
    for (int tail : {0, total / 20, total / 10, total / 5}) {
      const int lo = head, hi = total - tail;
      if (hi - lo < min_rows) continue;
      const auto [slope, r2] = fit_range(lo, hi);
      if (r2 > best.r_squared) {
        best.r_squared = r2;
        best.rate = -slope;
        best.window_start = ts[lo];
        best.window_end = ts[hi - 1];
        best.rows_used = hi - lo;
      }
    }
  }
  return best;
}

}  // namespace sphereflow
