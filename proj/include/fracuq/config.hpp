#pragma once

// Run configuration: a JSON document with sections model, field, space, time,
// qmc, estimator and output. Unknown keys are rejected; missing keys take the
// defaults below. to_json() writes the fully resolved configuration.

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fracuq/error.hpp"
#include "fracuq/field.hpp"
#include "fracuq/gf_poly.hpp"
#include "fracuq/stepper.hpp"

namespace fracuq {

using json = nlohmann::ordered_json;

struct ModelConfig {
  double alpha = 0.5;
  double T = 1.0;
  std::string source = "one";     // one | zero | steady
  std::string initial = "bump";   // bump | zero
  std::string functional = "mean";
};

struct FieldConfig {
  std::string type = "example";  // example | sine-table
  int q = 22;
  double psi_divisor = 10.0;
  bool sort_by_norm = false;
  std::array<double, 4> kappa0{0.2, 0.0, 0.0, 0.1};  // sine-table: c0 + c1 x1 + c2 x2 + c3 x1 x2
  std::vector<SineTerm> coeffs;
  double p = 0.55;
  std::optional<std::size_t> z;  // truncation; default: full basis
  int bounds_grid = 64;
  int bounds_samples = 256;
  std::uint64_t seed = 20240607;
};

struct SpaceConfig {
  int n_div = 53;
  std::string mesh;  // optional mesh file instead of the structured square
};

struct TimeConfig {
  int N_t = 150;
  std::optional<double> gamma;  // default 2/alpha
};

struct QmcConfig {
  unsigned b = 2;
  int m = 9;
  unsigned beta = 3;
  std::string genvec = "cbc";  // cbc | path to a generating-vector file
  double walsh_decay = 0.0;    // 0: max(beta, 2)
};

struct EstimatorConfig {
  std::vector<std::size_t> N_list{16, 32, 64, 128};
  std::size_t N_ref = 512;
  std::vector<std::size_t> z_list{1, 2, 4, 8, 16, 32, 64, 128};
  int levels = 3;
  std::string solver = "auto";  // auto | direct | pcg
  double cg_tol = 1e-10;
  int direct_max_dofs = 2000;
  bool fast_history = false;
  double history_tol = 1e-8;
  unsigned threads = 0;  // 0: FRACUQ_THREADS or hardware concurrency
};

struct OutputConfig {
  std::string dir = "out";
  bool dump_fields = false;
};

struct RunConfig {
  ModelConfig model;
  FieldConfig field;
  SpaceConfig space;
  TimeConfig time;
  QmcConfig qmc;
  EstimatorConfig estimator;
  OutputConfig output;

  double gamma() const { return time.gamma ? *time.gamma : 2.0 / model.alpha; }
  std::size_t num_points() const { return ipow(qmc.b, static_cast<unsigned>(qmc.m)); }
  SolverOptions solver_options() const {
    SolverOptions o;
    o.method = estimator.solver == "direct" ? LinearSolver::direct
               : estimator.solver == "pcg"  ? LinearSolver::pcg
                                            : LinearSolver::automatic;
    o.cg_tolerance = estimator.cg_tol;
    o.direct_max_dofs = estimator.direct_max_dofs;
    o.fast_history = estimator.fast_history;
    o.history_tolerance = estimator.history_tol;
    return o;
  }
};

namespace detail {

inline void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  require(obj.is_object(), ErrorCode::config, "config: section '" + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    require(ok.count(key) > 0, ErrorCode::config, "config: unknown key '" + section + "." + key + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::config, "config: wrong type for '" + section + "." + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, std::optional<T>& out, const std::string& section) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  T v{};
  read(obj, key, v, section);
  out = v;
}

}  // namespace detail

/// Range and consistency checks that do not need the field or the rule.
inline void validate(const RunConfig& c) {
  require(c.model.alpha > 0.0 && c.model.alpha < 1.0, ErrorCode::config, "config: model.alpha must lie in (0,1)");
  require(c.model.T > 0.0, ErrorCode::config, "config: model.T must be positive");
  require(c.model.source == "one" || c.model.source == "zero" || c.model.source == "steady", ErrorCode::config,
          "config: model.source must be one, zero or steady");
  require(c.model.initial == "bump" || c.model.initial == "zero", ErrorCode::config,
          "config: model.initial must be bump or zero");
  require(c.model.functional == "mean", ErrorCode::config, "config: model.functional must be mean");
  require(c.field.type == "example" || c.field.type == "sine-table", ErrorCode::config,
          "config: field.type must be example or sine-table");
  require(c.field.q >= 1, ErrorCode::config, "config: field.q must be >= 1");
  require(c.field.p > 0.0 && c.field.p < 1.0, ErrorCode::config, "config: field.p must lie in (0,1)");
  require(c.field.bounds_grid >= 2 && c.field.bounds_samples >= 1, ErrorCode::config,
          "config: field.bounds_grid >= 2 and field.bounds_samples >= 1 required");
  require(c.space.n_div >= 1, ErrorCode::config, "config: space.n_div must be >= 1");
  require(c.time.N_t >= 1, ErrorCode::config, "config: time.N_t must be >= 1");
  require(c.gamma() >= 1.0, ErrorCode::config, "config: time.gamma must be >= 1");
  require(is_prime(c.qmc.b), ErrorCode::config, "config: qmc.b must be prime");
  require(c.qmc.m >= 1 && c.qmc.beta >= 1, ErrorCode::config, "config: qmc.m and qmc.beta must be >= 1");
  require(c.estimator.solver == "auto" || c.estimator.solver == "direct" || c.estimator.solver == "pcg",
          ErrorCode::config, "config: estimator.solver must be auto, direct or pcg");
  require(c.estimator.cg_tol > 0.0 && c.estimator.history_tol > 0.0, ErrorCode::config,
          "config: tolerances must be positive");
  require(c.estimator.levels >= 2, ErrorCode::config, "config: estimator.levels must be >= 2");
}

inline RunConfig config_from_json(const json& j) {
  using detail::read;
  detail::check_keys(j, "<root>", {"model", "field", "space", "time", "qmc", "estimator", "output"});
  RunConfig c;
  auto section = [&](const char* name) { return j.contains(name) ? j.at(name) : json::object(); };

  const json m = section("model");
  detail::check_keys(m, "model", {"alpha", "T", "source", "initial", "functional"});
  read(m, "alpha", c.model.alpha, "model");
  read(m, "T", c.model.T, "model");
  read(m, "source", c.model.source, "model");
  read(m, "initial", c.model.initial, "model");
  read(m, "functional", c.model.functional, "model");

  const json f = section("field");
  detail::check_keys(f, "field", {"type", "q", "psi_divisor", "sort_by_norm", "kappa0", "coeffs", "p", "z",
                                  "bounds_grid", "bounds_samples", "seed"});
  read(f, "type", c.field.type, "field");
  read(f, "q", c.field.q, "field");
  read(f, "psi_divisor", c.field.psi_divisor, "field");
  read(f, "sort_by_norm", c.field.sort_by_norm, "field");
  read(f, "kappa0", c.field.kappa0, "field");
  read(f, "p", c.field.p, "field");
  read(f, "z", c.field.z, "field");
  read(f, "bounds_grid", c.field.bounds_grid, "field");
  read(f, "bounds_samples", c.field.bounds_samples, "field");
  read(f, "seed", c.field.seed, "field");
  if (f.contains("coeffs")) {
    std::vector<std::array<double, 3>> rows;
    read(f, "coeffs", rows, "field");
    for (const auto& r : rows) {
      require(r[0] >= 1 && r[1] >= 1 && r[0] == std::floor(r[0]) && r[1] == std::floor(r[1]), ErrorCode::config,
              "config: field.coeffs rows are [k, l, amplitude] with positive integers k, l");
      c.field.coeffs.push_back({static_cast<int>(r[0]), static_cast<int>(r[1]), r[2]});
    }
  }

  const json s = section("space");
  detail::check_keys(s, "space", {"n_div", "mesh"});
  read(s, "n_div", c.space.n_div, "space");
  read(s, "mesh", c.space.mesh, "space");

  const json t = section("time");
  detail::check_keys(t, "time", {"N_t", "gamma"});
  read(t, "N_t", c.time.N_t, "time");
  read(t, "gamma", c.time.gamma, "time");

  const json q = section("qmc");
  detail::check_keys(q, "qmc", {"b", "m", "beta", "genvec", "walsh_decay", "N"});
  read(q, "b", c.qmc.b, "qmc");
  read(q, "m", c.qmc.m, "qmc");
  read(q, "beta", c.qmc.beta, "qmc");
  read(q, "genvec", c.qmc.genvec, "qmc");
  read(q, "walsh_decay", c.qmc.walsh_decay, "qmc");
  std::optional<std::size_t> echoed_N;  // derived b^m, present in echoed configurations
  read(q, "N", echoed_N, "qmc");

  const json e = section("estimator");
  detail::check_keys(e, "estimator", {"N_list", "N_ref", "z_list", "levels", "solver", "cg_tol", "direct_max_dofs",
                                      "fast_history", "history_tol", "threads"});
  read(e, "N_list", c.estimator.N_list, "estimator");
  read(e, "N_ref", c.estimator.N_ref, "estimator");
  read(e, "z_list", c.estimator.z_list, "estimator");
  read(e, "levels", c.estimator.levels, "estimator");
  read(e, "solver", c.estimator.solver, "estimator");
  read(e, "cg_tol", c.estimator.cg_tol, "estimator");
  read(e, "direct_max_dofs", c.estimator.direct_max_dofs, "estimator");
  read(e, "fast_history", c.estimator.fast_history, "estimator");
  read(e, "history_tol", c.estimator.history_tol, "estimator");
  read(e, "threads", c.estimator.threads, "estimator");

  const json o = section("output");
  detail::check_keys(o, "output", {"dir", "dump_fields"});
  read(o, "dir", c.output.dir, "output");
  read(o, "dump_fields", c.output.dump_fields, "output");

  validate(c);
  require(!echoed_N || *echoed_N == c.num_points(), ErrorCode::config,
          "config: qmc.N is derived as b^m and must equal " + std::to_string(c.num_points()));
  return c;
}

inline json to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"alpha", c.model.alpha},
                {"T", c.model.T},
                {"source", c.model.source},
                {"initial", c.model.initial},
                {"functional", c.model.functional}};
  json coeffs = json::array();
  for (const auto& t : c.field.coeffs) coeffs.push_back({t.k, t.l, t.amplitude});
  j["field"] = {{"type", c.field.type},
                {"q", c.field.q},
                {"psi_divisor", c.field.psi_divisor},
                {"sort_by_norm", c.field.sort_by_norm},
                {"kappa0", c.field.kappa0},
                {"coeffs", coeffs},
                {"p", c.field.p},
                {"z", c.field.z ? json(*c.field.z) : json(nullptr)},
                {"bounds_grid", c.field.bounds_grid},
                {"bounds_samples", c.field.bounds_samples},
                {"seed", c.field.seed}};
  j["space"] = {{"n_div", c.space.n_div}, {"mesh", c.space.mesh}};
  j["time"] = {{"N_t", c.time.N_t}, {"gamma", c.gamma()}};
  j["qmc"] = {{"b", c.qmc.b},
              {"m", c.qmc.m},
              {"beta", c.qmc.beta},
              {"genvec", c.qmc.genvec},
              {"walsh_decay", c.qmc.walsh_decay},
              {"N", c.num_points()}};
  j["estimator"] = {{"N_list", c.estimator.N_list},
                    {"N_ref", c.estimator.N_ref},
                    {"z_list", c.estimator.z_list},
                    {"levels", c.estimator.levels},
                    {"solver", c.estimator.solver},
                    {"cg_tol", c.estimator.cg_tol},
                    {"direct_max_dofs", c.estimator.direct_max_dofs},
                    {"fast_history", c.estimator.fast_history},
                    {"history_tol", c.estimator.history_tol},
                    {"threads", c.estimator.threads}};
  j["output"] = {{"dir", c.output.dir}, {"dump_fields", c.output.dump_fields}};
  return j;
}

/// Applies "section.key=value"; value is read as JSON when it parses, else as a string.
inline void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, ErrorCode::usage, "--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  const auto dot = key.find('.');
  require(dot != std::string::npos && dot > 0 && dot + 1 < key.size() && key.find('.', dot + 1) == std::string::npos,
          ErrorCode::usage, "--set key must look like section.key, got '" + key + "'");
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  const std::string section = key.substr(0, dot), name = key.substr(dot + 1);
  j[section][name] = value;
  // the echoed point count follows b and m
  if (section == "qmc" && (name == "b" || name == "m") && j[section].is_object()) j[section].erase("N");
}

inline json read_json_file(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::usage, "cannot open config file '" + path + "'");
  json j = json::parse(is, nullptr, false);
  require(!j.is_discarded(), ErrorCode::parse, "config file '" + path + "' is not valid JSON");
  return j;
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  json j = path.empty() ? json::object() : read_json_file(path);
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

}  // namespace fracuq
