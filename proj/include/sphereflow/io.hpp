#pragma once

// JSON snapshots and run configuration, CSV trace output.  Configs are
// schema-checked before any computation; unknown keys are rejected.

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sphereflow/errors.hpp"
#include "sphereflow/flow.hpp"
#include "sphereflow/grid.hpp"

namespace sphereflow {

using nlohmann::json;

struct OutputPaths {
  std::string trace;           // CSV trace path ("" = stdout)
  std::string snapshot_dir;    // directory for periodic snapshots ("" = off)
  std::string final_snapshot;  // final graph snapshot ("" = off)
};

struct RunConfig {
  FlowConfig flow;
  OutputPaths output;
};

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

inline double require_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError("config: missing numeric '" + key + "' in " + where);
  return j[key].get<double>();
}

}  // namespace detail

inline SpeedSpec parse_speed_json(const json& j) {
  detail::reject_unknown_keys(j, {"kind", "scale"}, "speed");
  if (!j.contains("kind") || !j["kind"].is_string())
    throw ConfigError("config: speed.kind must be a string");
  SpeedSpec spec = parse_speed(j["kind"].get<std::string>());
  if (j.contains("scale")) spec.scale = j["scale"].get<double>();
  return spec;
}

inline WeightSpec parse_weights_json(const json& j, int n) {
  detail::reject_unknown_keys(j, {"c"}, "weights");
  if (!j.contains("c") || !j["c"].is_array())
    throw ConfigError("config: weights.c must be an array");
  const auto& arr = j["c"];
  if (int(arr.size()) != n + 2) throw ConfigError("config: weights.c must have n+2 entries");
  Eigen::VectorXd c(n + 2);
  for (int i = 0; i < n + 2; ++i) c[i] = arr[i].get<double>();
  return WeightSpec(c);
}

inline InitialCondition parse_initial_json(const json& j, int n) {
  if (!j.contains("type") || !j["type"].is_string())
    throw ConfigError("config: initial.type must be a string");
  const std::string type = j["type"].get<std::string>();
  InitialCondition ic;
  if (type == "harmonic_mix") {
    detail::reject_unknown_keys(
        j, {"type", "amplitude", "seed", "min_degree", "max_degree", "modes"}, "initial");
    ic.kind = InitialCondition::Kind::kHarmonicMix;
    ic.amplitude = detail::require_number(j, "amplitude", "initial");
    if (j.contains("seed")) ic.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("min_degree")) ic.min_degree = j["min_degree"].get<int>();
    if (j.contains("max_degree")) ic.max_degree = j["max_degree"].get<int>();
    if (j.contains("modes")) {
      for (const auto& m : j["modes"]) {
        detail::reject_unknown_keys(m, {"degree", "index", "coefficient"}, "initial.modes[]");
        InitialCondition::Mode mode;
        mode.degree = m.at("degree").get<int>();
        if (m.contains("index")) mode.index = m["index"].get<int>();
        if (m.contains("coefficient")) mode.coefficient = m["coefficient"].get<double>();
        ic.modes.push_back(mode);
      }
    }
    if (ic.seed == 0 && ic.modes.empty())
      throw ConfigError("config: harmonic_mix needs a seed or explicit modes");
  } else if (type == "sphere") {
    detail::reject_unknown_keys(j, {"type", "b"}, "initial");
    ic.kind = InitialCondition::Kind::kSphere;
    if (!j.contains("b") || int(j["b"].size()) != n + 2)
      throw ConfigError("config: initial.b must have n+2 entries");
    ic.sphere_b = Eigen::VectorXd(n + 2);
    for (int i = 0; i < n + 2; ++i) ic.sphere_b[i] = j["b"][i].get<double>();
  } else if (type == "field") {
    detail::reject_unknown_keys(j, {"type", "values"}, "initial");
    ic.kind = InitialCondition::Kind::kField;
    if (!j.contains("values") || !j["values"].is_array())
      throw ConfigError("config: initial.values must be an array");
    for (const auto& v : j["values"]) ic.field_values.push_back(v.get<double>());
  } else {
    throw ConfigError("config: unknown initial.type '" + type + "'");
  }
  return ic;
}

inline RunConfig parse_run_config(const json& j) {
  detail::reject_unknown_keys(
      j,
      {"schema", "n", "theta", "resolution", "speed", "weights", "initial", "t_end", "dt_init",
       "safety", "snapshot_stride", "fit_spheres", "renormalize", "atol", "rtol", "output"},
      "top level");
  if (j.contains("schema") && j["schema"].get<std::string>() != "flow-config/1")
    throw ConfigError("config: unsupported schema tag");
  RunConfig rc;
  auto& f = rc.flow;
  f.n = int(detail::require_number(j, "n", "top level"));
  f.theta = detail::require_number(j, "theta", "top level");
  f.resolution = int(detail::require_number(j, "resolution", "top level"));
  if (!j.contains("speed")) throw ConfigError("config: missing speed");
  f.speed = parse_speed_json(j["speed"]);
  if (!j.contains("weights")) throw ConfigError("config: missing weights");
  f.weights = parse_weights_json(j["weights"], f.n);
  if (!j.contains("initial")) throw ConfigError("config: missing initial");
  f.initial = parse_initial_json(j["initial"], f.n);
  f.t_end = detail::require_number(j, "t_end", "top level");
  if (j.contains("dt_init")) f.dt_init = j["dt_init"].get<double>();
  if (j.contains("safety")) f.safety = j["safety"].get<double>();
  if (j.contains("snapshot_stride")) f.snapshot_stride = j["snapshot_stride"].get<int>();
  if (j.contains("fit_spheres")) f.fit_spheres = j["fit_spheres"].get<bool>();
  if (j.contains("renormalize")) f.renormalize = j["renormalize"].get<bool>();
  if (j.contains("atol")) f.atol = j["atol"].get<double>();
  if (j.contains("rtol")) f.rtol = j["rtol"].get<double>();
  if (j.contains("output")) {
    detail::reject_unknown_keys(j["output"], {"trace", "snapshot_dir", "final_snapshot"},
                                "output");
    if (j["output"].contains("trace")) rc.output.trace = j["output"]["trace"].get<std::string>();
    if (j["output"].contains("snapshot_dir"))
      rc.output.snapshot_dir = j["output"]["snapshot_dir"].get<std::string>();
    if (j["output"].contains("final_snapshot"))
      rc.output.final_snapshot = j["output"]["final_snapshot"].get<std::string>();
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_run_config(j);
}

// --- snapshots --------------------------------------------------------------

// Field snapshot: {n, resolution, values}.  Graph snapshots add theta.
inline json field_to_json(const SphereGrid& grid, const ScalarField& f) {
  json j;
  j["n"] = grid.dim();
  j["resolution"] = grid.resolution();
  j["values"] = f;
  return j;
}

inline json graph_to_json(const GraphFunction& gf) {
  json j = field_to_json(*gf.grid, gf.u);
  j["theta"] = gf.theta;
  return j;
}

struct SnapshotData {
  int n = 0;
  int resolution = 0;
  double theta = std::numeric_limits<double>::quiet_NaN();  // NaN = field snapshot
  ScalarField values;
};

inline SnapshotData snapshot_from_json(const json& j) {
  detail::reject_unknown_keys(j, {"n", "resolution", "theta", "values"}, "snapshot");
  SnapshotData s;
  s.n = j.at("n").get<int>();
  s.resolution = j.at("resolution").get<int>();
  if (j.contains("theta")) s.theta = j["theta"].get<double>();
  for (const auto& v : j.at("values")) s.values.push_back(v.get<double>());
  return s;
}

inline SnapshotData load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open snapshot file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("snapshot: JSON parse error: ") + e.what());
  }
  return snapshot_from_json(j);
}

// --- CSV trace ---------------------------------------------------------------

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string trace_csv_header(int n) {
  std::string h = "t,dt,max_u,max_G";
  for (int a = 0; a <= n + 1; ++a) h += ",V" + std::to_string(a);
  h += ",Vhat,res_nonsphere";
  for (int a = 0; a <= n + 1; ++a) h += ",fit_b" + std::to_string(a);
  h += ",fit_residual";
  return h;
}

inline std::string trace_to_csv(const FlowTrace& trace) {
  std::ostringstream out;
  out << trace_csv_header(trace.n) << "\n";
  for (const auto& row : trace.rows) {
    out << format_double(row.t) << ',' << format_double(row.dt) << ','
        << format_double(row.max_u) << ',' << format_double(row.max_ghat);
    for (int a = 0; a < row.volumes.size(); ++a) out << ',' << format_double(row.volumes[a]);
    out << ',' << format_double(row.vhat) << ',' << format_double(row.res_nonsphere);
    for (int a = 0; a <= trace.n + 1; ++a) {
      out << ',';
      if (row.fit_b.size() == trace.n + 2) out << format_double(row.fit_b[a]);
      else out << "nan";
    }
    out << ',' << format_double(row.fit_residual) << "\n";
  }
  return out.str();
}

}  // namespace sphereflow
