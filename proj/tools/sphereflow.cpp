// Command-line front end: flow runs, spectrum reports, weight tables,
// sphere fitting, and the built-in verification suite.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sphereflow/io.hpp"
#include "sphereflow/stability.hpp"
#include "sphereflow/verification.hpp"

namespace {

using namespace sphereflow;

int cmd_flow_run(const std::string& config_path) {
  const RunConfig rc = load_run_config(config_path);
  const SphereGrid grid = SphereGrid::build(rc.flow.n, rc.flow.resolution);

  SnapshotHook hook;
  if (!rc.output.snapshot_dir.empty()) {
    std::filesystem::create_directories(rc.output.snapshot_dir);
    hook = [&](int step, double /*t*/, const ScalarField& u) {
      GraphFunction gf(grid, rc.flow.theta, u);
      std::ofstream out(rc.output.snapshot_dir + "/snap_" + std::to_string(step) + ".json");
      out << graph_to_json(gf).dump() << "\n";
    };
  }

  const FlowTrace trace = run_flow(rc.flow, hook);

  const std::string csv = trace_to_csv(trace);
  if (rc.output.trace.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(rc.output.trace);
    out << csv;
  }
  if (!rc.output.final_snapshot.empty()) {
    GraphFunction gf(grid, rc.flow.theta, trace.final_u);
    std::ofstream out(rc.output.final_snapshot);
    out << graph_to_json(gf).dump() << "\n";
  }
  std::cerr << "flow: " << to_string(trace.status) << " after " << trace.accepted_steps
            << " steps (" << trace.rejected_steps << " rejected), t = "
            << (trace.rows.empty() ? 0.0 : trace.rows.back().t) << "\n";
  switch (trace.status) {
    case FlowStatus::kConverged: return 0;
    case FlowStatus::kReachedTEnd: return 2;
    case FlowStatus::kDegenerate: return 3;
  }
  return 1;
}

int cmd_spectrum(int n, double theta, const std::string& speed_text, int resolution,
                 bool numeric) {
  const SphereGrid grid = SphereGrid::build(n, resolution);
  const SpeedSpec speed = parse_speed(speed_text);
  LinearOperator op = numeric
                          ? dg0_numeric(grid, theta, speed, WeightSpec::basis(n, n + 1))
                          : dg0_analytic(grid, theta, speed);
  const SpectrumResult res = spectrum(op);
  std::cout << "index,eigenvalue\n";
  for (size_t i = 0; i < res.eigenvalues.size(); ++i)
    std::cout << i << ',' << format_double(res.eigenvalues[i]) << "\n";
  std::cout << "null_multiplicity," << res.null_multiplicity << "\n";
  std::cout << "gap," << format_double(res.gap) << "\n";
  return 0;
}

int cmd_weights(int n, double theta) {
  std::cout << "a,xi_a,zhat_a\n";
  for (int a = 0; a <= n + 1; ++a)
    std::cout << a << ',' << format_double(xi_sphere_closed_form(n, theta, a)) << ','
              << format_double(zhat_sphere(n, theta, a)) << "\n";
  return 0;
}

int cmd_fit_sphere(const std::string& snapshot_path, double theta_override) {
  const SnapshotData snap = load_snapshot(snapshot_path);
  double theta = snap.theta;
  if (!std::isnan(theta_override)) theta = theta_override;
  if (std::isnan(theta))
    throw ConfigError("snapshot has no theta; pass --theta");
  const SphereGrid grid = SphereGrid::build(snap.n, snap.resolution);
  GraphFunction gf(grid, theta, snap.values);
  const SphereFit fit = fit_sphere(gf);
  json out;
  out["b"] = std::vector<double>(fit.params.b.data(), fit.params.b.data() + fit.params.b.size());
  out["residual"] = fit.residual;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_verify(bool quick) {
  const auto results = run_verification(quick);
  size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  bool all_pass = true;
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    std::printf("%-*s  %s  %7.2fs  %s\n", int(width), r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
  }
  std::printf("%zu checks, %zu failed\n", results.size(),
              size_t(std::count_if(results.begin(), results.end(),
                                   [](const CheckResult& r) { return !r.pass; })));
  return all_pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constrained curvature flows of sphere graphs"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "cap the worker count");

  auto* flow = app.add_subcommand("flow", "time integration");
  auto* flow_run = flow->add_subcommand("run", "run a flow from a JSON config");
  std::string config_path;
  flow_run->add_option("config", config_path, "config JSON path")->required();

  auto* spec_cmd = app.add_subcommand("spectrum", "linearized operator spectrum");
  int sp_n = 1, sp_res = 64;
  double sp_theta = kPi / 3;
  std::string sp_speed = "E_1";
  bool sp_numeric = false;
  spec_cmd->add_option("--n", sp_n, "hypersurface dimension (1 or 2)")->required();
  spec_cmd->add_option("--theta", sp_theta, "base sphere colatitude")->required();
  spec_cmd->add_option("--speed", sp_speed, "speed function (E_1, E_2^{1/2}, E_2/E_1, ...)");
  spec_cmd->add_option("--resolution", sp_res, "grid resolution");
  spec_cmd->add_flag("--numeric", sp_numeric, "finite-difference Jacobian instead of analytic");

  auto* weights_cmd = app.add_subcommand("weights", "weight table on the base sphere");
  int w_n = 1;
  double w_theta = kPi / 3;
  weights_cmd->add_option("--n", w_n, "hypersurface dimension")->required();
  weights_cmd->add_option("--theta", w_theta, "base sphere colatitude")->required();

  auto* fit_cmd = app.add_subcommand("fit-sphere", "fit sphere parameters to a snapshot");
  std::string snap_path;
  double fit_theta = std::numeric_limits<double>::quiet_NaN();
  fit_cmd->add_option("snapshot", snap_path, "graph snapshot JSON")->required();
  fit_cmd->add_option("--theta", fit_theta, "base colatitude (overrides snapshot)");

  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  bool quick = false;
  verify_cmd->add_flag("--quick", quick, "reduced sample counts and short runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  if (threads > 0) sphereflow::set_worker_count(threads);

  try {
    if (flow_run->parsed()) return cmd_flow_run(config_path);
    if (spec_cmd->parsed()) return cmd_spectrum(sp_n, sp_theta, sp_speed, sp_res, sp_numeric);
    if (weights_cmd->parsed()) return cmd_weights(w_n, w_theta);
    if (fit_cmd->parsed()) return cmd_fit_sphere(snap_path, fit_theta);
    if (verify_cmd->parsed()) return cmd_verify(quick);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
