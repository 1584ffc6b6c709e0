#pragma once

// Experiment configuration loaded from YAML. The grammar is documented in
// docs/config.md; every key is optional unless noted there.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "oadp/linalg.hpp"
#include "oadp/observer.hpp"
#include "oadp/random.hpp"
#include "oadp/sim.hpp"

namespace oadp {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RandomPlantSpec {
  std::uint64_t seed = 0;
  RandomPlantOptions options;
};

struct OracleExpectation {
  std::optional<Matrix> P, K, L, M;
  double tol = 5e-4;     // absolute, for P, K, L
  double m_rtol = 1e-3;  // relative, entry-wise for M
};

struct Expectations {
  bool rank_failure = false;  // the run must stop on a failed rank condition
  std::optional<bool> converged;
  std::optional<int> min_iterations, max_iterations;
  std::optional<double> max_k_error, max_p_error, max_seconds;
  OracleExpectation oracle;
  bool has_oracle = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string source;  // verbatim text the config was parsed from

  LtiPlant plant;
  std::optional<RandomPlantSpec> random_plant;
  Matrix qy, r;

  ObserverPoly poly;
  std::optional<Matrix> L;
  bool strict_polynomial = true;

  ExplorationSignal signal;
  Vector x0, zeta0;
  double dt = 1e-3;

  double t0 = 0.0;
  double spacing = 0.1;
  Index knots = 0;
  double rank_tol = 1e-8;
  bool auto_extend = false;
  Index auto_cap = 0;

  std::string algorithm = "oracle-only";
  std::optional<Matrix> gain0;        // K0 / Kbar0 in the algorithm's coordinates
  std::optional<Matrix> plant_gain0;  // m x n gain mapped through M
  std::optional<Matrix> p0;
  double tol = 0.01;
  int max_iters = 100;
  double step_scale = 1.0;
  double bound_scale = 1000.0;
  double epsilon = 0.01;
  int consecutive_hits = 3;
  double solver_rtol = 1e-9;
  bool equilibrate = true;
  std::string target = "plant";  // model algorithms: plant | ancillary

  Expectations expect;
  std::string output_dir;  // relative to the output root; defaults to name
  bool export_stacks = false;

  bool is_data_driven() const {
    return algorithm == "state-pi" || algorithm == "state-vi" || algorithm == "output-pi" ||
           algorithm == "output-vi" || algorithm == "improved-pi" || algorithm == "improved-vi";
  }
  bool is_state_based() const { return algorithm == "state-pi" || algorithm == "state-vi"; }
  bool is_vi() const {
    return algorithm == "state-vi" || algorithm == "output-vi" || algorithm == "improved-vi" ||
           algorithm == "model-vi";
  }
  double t_end() const {
    const Index s = auto_extend ? std::max(knots, auto_cap) : knots;
    return t0 + spacing * static_cast<double>(s);
  }
};

namespace cfg {

inline std::string where(const std::string& path) { return "config: " + path + ": "; }

inline double scalar(const YAML::Node& n, const std::string& path) {
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(path) + "expected a number");
  }
}

inline Vector vector(const YAML::Node& n, const std::string& path) {
  if (n.IsScalar()) return Vector::Constant(1, scalar(n, path));
  if (!n.IsSequence()) throw ConfigError(where(path) + "expected a list of numbers");
  Vector v(static_cast<Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i)
    v(static_cast<Index>(i)) = scalar(n[i], path + "[" + std::to_string(i) + "]");
  return v;
}

/// Nested rows [[..], [..]], a flat list (one row), a scalar (1 x 1), or
/// {rows, cols, data} with data row-major.
inline Matrix matrix(const YAML::Node& n, const std::string& path) {
  if (n.IsScalar()) return Matrix::Constant(1, 1, scalar(n, path));
  if (n.IsMap()) {
    if (!n["rows"] || !n["cols"] || !n["data"])
      throw ConfigError(where(path) + "matrix map needs rows, cols and data");
    const auto rows = n["rows"].as<Index>(), cols = n["cols"].as<Index>();
    const Vector data = vector(n["data"], path + ".data");
    if (data.size() != rows * cols)
      throw ConfigError(where(path) + "data has " + std::to_string(data.size()) +
                        " entries, expected " + std::to_string(rows * cols));
    Matrix a(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) a(i, j) = data(i * cols + j);
    return a;
  }
  if (!n.IsSequence() || n.size() == 0) throw ConfigError(where(path) + "expected a matrix");
  if (!n[0].IsSequence()) return vector(n, path).transpose();
  const auto rows = static_cast<Index>(n.size());
  const auto cols = static_cast<Index>(n[0].size());
  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const YAML::Node row = n[static_cast<std::size_t>(i)];
    if (!row.IsSequence() || static_cast<Index>(row.size()) != cols)
      throw ConfigError(where(path) + "ragged matrix rows");
    for (Index j = 0; j < cols; ++j)
      a(i, j) = scalar(row[static_cast<std::size_t>(j)], path);
  }
  return a;
}

template <class T>
T get(const YAML::Node& parent, const char* key, const std::string& path, T fallback) {
  if (!parent) return fallback;
  const YAML::Node n = parent[key];
  if (!n) return fallback;
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(path + "." + key) + "wrong type");
  }
}

inline void check_keys(const YAML::Node& n, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  if (!n) return;
  if (!n.IsMap()) throw ConfigError(where(path) + "expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where(path) + "unknown key '" + key + "'");
  }
}

}  // namespace cfg

inline ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML syntax: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");
  cfg::check_keys(root, "root",
                  {"name", "plant", "cost", "observer", "signal", "simulation", "data",
                   "algorithm", "expect", "output"});

  ExperimentConfig c;
  c.source = text;
  c.name = cfg::get<std::string>(root, "name", "root", c.name);

  // plant
  const YAML::Node plant = root["plant"];
  if (!plant) throw ConfigError("config: plant: section is required");
  cfg::check_keys(plant, "plant", {"A", "B", "C", "random"});
  if (plant["random"]) {
    const YAML::Node r = plant["random"];
    cfg::check_keys(r, "plant.random", {"seed", "n", "m", "p", "stable", "margin"});
    RandomPlantSpec spec;
    spec.seed = cfg::get<std::uint64_t>(r, "seed", "plant.random", 0);
    spec.options.n = cfg::get<Index>(r, "n", "plant.random", 3);
    spec.options.m = cfg::get<Index>(r, "m", "plant.random", 1);
    spec.options.p = cfg::get<Index>(r, "p", "plant.random", 1);
    spec.options.stable = cfg::get<bool>(r, "stable", "plant.random", false);
    spec.options.stability_margin = cfg::get<double>(r, "margin", "plant.random", 0.5);
    Rng rng(spec.seed);
    c.plant = random_plant(rng, spec.options);
    c.random_plant = spec;
  } else {
    if (!plant["A"] || !plant["B"] || !plant["C"])
      throw ConfigError("config: plant: A, B and C are required (or plant.random)");
    c.plant.A = cfg::matrix(plant["A"], "plant.A");
    c.plant.B = cfg::matrix(plant["B"], "plant.B");
    c.plant.C = cfg::matrix(plant["C"], "plant.C");
  }
  try {
    c.plant.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("config: plant: ") + e.what());
  }
  const Index n = c.plant.n(), m = c.plant.m(), p = c.plant.p();

  // cost
  const YAML::Node cost = root["cost"];
  cfg::check_keys(cost, "cost", {"Qy", "R"});
  c.qy = cost && cost["Qy"] ? cfg::matrix(cost["Qy"], "cost.Qy") : Matrix::Identity(p, p);
  c.r = cost && cost["R"] ? cfg::matrix(cost["R"], "cost.R") : Matrix::Identity(m, m);
  if (c.qy.rows() != p || c.qy.cols() != p) throw ConfigError("config: cost.Qy must be p x p");
  if (c.r.rows() != m || c.r.cols() != m) throw ConfigError("config: cost.R must be m x m");

  // observer
  const YAML::Node obs = root["observer"];
  cfg::check_keys(obs, "observer", {"roots", "coefficients", "L", "strict"});
  if (obs && obs["coefficients"]) {
    c.poly = ObserverPoly::from_coefficients(cfg::vector(obs["coefficients"], "observer.coefficients"));
  } else if (obs && obs["roots"]) {
    const Vector roots = cfg::vector(obs["roots"], "observer.roots");
    c.poly = ObserverPoly::from_roots(std::span<const double>(roots.data(), static_cast<std::size_t>(roots.size())));
  } else {
    throw ConfigError("config: observer: roots or coefficients are required");
  }
  if (c.poly.degree() != n) throw ConfigError("config: observer polynomial degree must equal n");
  if (obs["L"]) {
    c.L = cfg::matrix(obs["L"], "observer.L");
    if (c.L->rows() == 1 && c.L->cols() == n && p == 1) c.L = c.L->transpose().eval();
    if (c.L->rows() != n || c.L->cols() != p) throw ConfigError("config: observer.L must be n x p");
  }
  c.strict_polynomial = cfg::get<bool>(obs, "strict", "observer", true);
  const Index nz = (m + p) * n;

  // signal
  const YAML::Node sig = root["signal"];
  cfg::check_keys(sig, "signal", {"zeta_gain", "state_gain", "sinusoids", "offset", "start_time"});
  if (sig) {
    if (sig["zeta_gain"]) c.signal.zeta_gain = cfg::matrix(sig["zeta_gain"], "signal.zeta_gain");
    if (sig["state_gain"]) c.signal.state_gain = cfg::matrix(sig["state_gain"], "signal.state_gain");
    if (sig["offset"]) c.signal.offset = cfg::vector(sig["offset"], "signal.offset");
    c.signal.start_time = cfg::get<double>(sig, "start_time", "signal", 0.0);
    if (const YAML::Node list = sig["sinusoids"]) {
      if (!list.IsSequence()) throw ConfigError("config: signal.sinusoids must be a list");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "signal.sinusoids[" + std::to_string(i) + "]";
        cfg::check_keys(list[i], path, {"amplitude", "omega", "phase", "channel"});
        Sinusoid s;
        s.amplitude = cfg::get<double>(list[i], "amplitude", path, 1.0);
        s.omega = cfg::get<double>(list[i], "omega", path, 1.0);
        s.phase = cfg::get<double>(list[i], "phase", path, 0.0);
        s.channel = cfg::get<Index>(list[i], "channel", path, 0);
        c.signal.sinusoids.push_back(s);
      }
    }
  }
  try {
    c.signal.validate(m, n, nz);
  } catch (const Error& e) {
    throw ConfigError(std::string("config: signal: ") + e.what());
  }

  // simulation
  const YAML::Node sim = root["simulation"];
  cfg::check_keys(sim, "simulation", {"x0", "zeta0", "dt"});
  c.x0 = sim && sim["x0"] ? cfg::vector(sim["x0"], "simulation.x0") : Vector::Zero(n);
  c.zeta0 = sim && sim["zeta0"] ? cfg::vector(sim["zeta0"], "simulation.zeta0") : Vector::Zero(nz);
  c.dt = cfg::get<double>(sim, "dt", "simulation", c.dt);
  if (c.x0.size() != n) throw ConfigError("config: simulation.x0 must have n entries");
  if (c.zeta0.size() != nz) throw ConfigError("config: simulation.zeta0 must have (m+p)n entries");
  if (!(c.dt > 0.0)) throw ConfigError("config: simulation.dt must be positive");

  // data window
  const YAML::Node data = root["data"];
  cfg::check_keys(data, "data", {"t0", "spacing", "knots", "rank_tol", "mode", "auto_cap"});
  c.t0 = cfg::get<double>(data, "t0", "data", c.t0);
  c.spacing = cfg::get<double>(data, "spacing", "data", c.spacing);
  c.knots = cfg::get<Index>(data, "knots", "data", 0);
  c.rank_tol = cfg::get<double>(data, "rank_tol", "data", c.rank_tol);
  const auto mode = cfg::get<std::string>(data, "mode", "data", "strict");
  if (mode != "strict" && mode != "auto") throw ConfigError("config: data.mode must be strict or auto");
  c.auto_extend = mode == "auto";
  c.auto_cap = cfg::get<Index>(data, "auto_cap", "data", c.knots * 4);
  {
    const double ratio = c.spacing / c.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 || ratio < 1.0 - 1e-9)
      throw ConfigError("config: data.spacing must be a multiple of simulation.dt");
    const double start = c.t0 / c.dt;
    if (c.t0 < 0.0 || std::abs(start - std::round(start)) > 1e-6)
      throw ConfigError("config: data.t0 must be a nonnegative multiple of simulation.dt");
  }

  // algorithm
  const YAML::Node alg = root["algorithm"];
  cfg::check_keys(alg, "algorithm",
                  {"kind", "K0", "K0_plant", "P0", "tol", "max_iters", "step_scale", "bound_scale",
                   "epsilon", "consecutive_hits", "solver_rtol", "equilibrate", "target"});
  c.algorithm = cfg::get<std::string>(alg, "kind", "algorithm", c.algorithm);
  static const char* const kinds[] = {"state-pi", "state-vi", "output-pi", "output-vi",
                                      "improved-pi", "improved-vi", "model-kleinman",
                                      "model-vi", "oracle-only"};
  bool known = false;
  for (const char* k : kinds) known = known || c.algorithm == k;
  if (!known) throw ConfigError("config: algorithm.kind: unknown algorithm '" + c.algorithm + "'");
  if (alg) {
    if (alg["K0"]) c.gain0 = cfg::matrix(alg["K0"], "algorithm.K0");
    if (alg["K0_plant"]) c.plant_gain0 = cfg::matrix(alg["K0_plant"], "algorithm.K0_plant");
    if (alg["P0"]) c.p0 = cfg::matrix(alg["P0"], "algorithm.P0");
  }
  c.tol = cfg::get<double>(alg, "tol", "algorithm", c.tol);
  c.max_iters = cfg::get<int>(alg, "max_iters", "algorithm", c.is_vi() ? 100000 : 100);
  c.step_scale = cfg::get<double>(alg, "step_scale", "algorithm", c.step_scale);
  c.bound_scale = cfg::get<double>(alg, "bound_scale", "algorithm", c.bound_scale);
  c.epsilon = cfg::get<double>(alg, "epsilon", "algorithm", c.epsilon);
  c.consecutive_hits = cfg::get<int>(alg, "consecutive_hits", "algorithm", c.consecutive_hits);
  c.solver_rtol = cfg::get<double>(alg, "solver_rtol", "algorithm", c.solver_rtol);
  c.equilibrate = cfg::get<bool>(alg, "equilibrate", "algorithm", c.equilibrate);
  c.target = cfg::get<std::string>(alg, "target", "algorithm", c.target);
  if (c.target != "plant" && c.target != "ancillary")
    throw ConfigError("config: algorithm.target must be plant or ancillary");
  if (c.is_data_driven() && c.knots < 1)
    throw ConfigError("config: data.knots must be at least 1 for data-driven algorithms");
  if (c.plant_gain0 && (c.plant_gain0->rows() != m || c.plant_gain0->cols() != n))
    throw ConfigError("config: algorithm.K0_plant must be m x n");

  // expectations
  const YAML::Node ex = root["expect"];
  cfg::check_keys(ex, "expect",
                  {"rank_failure", "converged", "min_iterations", "max_iterations", "max_k_error",
                   "max_p_error", "max_seconds", "oracle"});
  if (ex) {
    c.expect.rank_failure = cfg::get<bool>(ex, "rank_failure", "expect", false);
    if (ex["converged"]) c.expect.converged = cfg::get<bool>(ex, "converged", "expect", true);
    if (ex["min_iterations"]) c.expect.min_iterations = cfg::get<int>(ex, "min_iterations", "expect", 0);
    if (ex["max_iterations"]) c.expect.max_iterations = cfg::get<int>(ex, "max_iterations", "expect", 0);
    if (ex["max_k_error"]) c.expect.max_k_error = cfg::get<double>(ex, "max_k_error", "expect", 0.0);
    if (ex["max_p_error"]) c.expect.max_p_error = cfg::get<double>(ex, "max_p_error", "expect", 0.0);
    if (ex["max_seconds"]) c.expect.max_seconds = cfg::get<double>(ex, "max_seconds", "expect", 0.0);
    if (const YAML::Node o = ex["oracle"]) {
      cfg::check_keys(o, "expect.oracle", {"P", "K", "L", "M", "tol", "m_rtol"});
      c.expect.has_oracle = true;
      if (o["P"]) c.expect.oracle.P = cfg::matrix(o["P"], "expect.oracle.P");
      if (o["K"]) c.expect.oracle.K = cfg::matrix(o["K"], "expect.oracle.K");
      if (o["L"]) c.expect.oracle.L = cfg::matrix(o["L"], "expect.oracle.L");
      if (o["M"]) c.expect.oracle.M = cfg::matrix(o["M"], "expect.oracle.M");
      c.expect.oracle.tol = cfg::get<double>(o, "tol", "expect.oracle", c.expect.oracle.tol);
      c.expect.oracle.m_rtol = cfg::get<double>(o, "m_rtol", "expect.oracle", c.expect.oracle.m_rtol);
    }
  }

  // output
  const YAML::Node out = root["output"];
  cfg::check_keys(out, "output", {"dir", "stacks"});
  c.output_dir = cfg::get<std::string>(out, "dir", "output", c.name);
  c.export_stacks = cfg::get<bool>(out, "stacks", "output", false);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace oadp
