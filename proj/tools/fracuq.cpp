// fracuq: command-line front end.
//
// Exit status 0 on success, 1 on domain/solver/config errors, 2 on usage errors.
// Every error is reported on one line as `error[CODE]: message`.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fracuq/cbc.hpp"
#include "fracuq/config.hpp"
#include "fracuq/estimator.hpp"
#include "fracuq/lattice.hpp"
#include "fracuq/mesh.hpp"
#include "fracuq/output.hpp"

namespace fs = std::filesystem;
using namespace fracuq;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  unsigned threads = 0;
  std::string out;
  bool verbose = false;
  bool dump_fields = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "run configuration (JSON)")->required();
  cmd->add_option("--set", c.overrides, "override a configuration value, section.key=value (repeatable)");
  cmd->add_option("--threads", c.threads, "worker threads (default: FRACUQ_THREADS or all cores)");
  cmd->add_option("--out", c.out, "output directory (default: output.dir of the configuration)");
  cmd->add_flag("-v,--verbose", c.verbose, "progress messages on stderr");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = load_config(c.config, c.overrides);
  if (c.threads > 0) cfg.estimator.threads = c.threads;
  if (!c.out.empty()) cfg.output.dir = c.out;
  if (c.dump_fields) cfg.output.dump_fields = true;
  return cfg;
}

fs::path out_dir(const RunConfig& cfg) {
  fs::create_directories(cfg.output.dir);
  return cfg.output.dir;
}

void echo_config(const RunConfig& cfg) {
  auto os = open_output(out_dir(cfg) / "resolved-config.json");
  os << to_json(cfg).dump(2) << '\n';
}

void log(const Common& c, const std::string& msg) {
  if (c.verbose) std::cerr << "[fracuq] " << msg << '\n';
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T x{};
    require(static_cast<bool>(is >> x) && is.eof(), ErrorCode::usage,
            std::string("could not parse ") + what + " list '" + text + "'");
    v.push_back(x);
  }
  require(!v.empty(), ErrorCode::usage, std::string("empty ") + what + " list");
  return v;
}

int run_check(const Common& c) {
  const RunConfig cfg = resolve(c);
  const RandomField field = build_field(cfg);
  const std::size_t z = truncation_dim(cfg, field);
  const auto mesh = build_mesh(cfg, cfg.space.n_div);
  const BoundsReport bounds = verify_bounds(field, cfg.field.bounds_grid, cfg.field.bounds_samples, cfg.field.seed);
  std::printf("alpha = %s\n", num(cfg.model.alpha).c_str());
  std::printf("T = %s\n", num(cfg.model.T).c_str());
  std::printf("field = %s, basis length %zu\n", cfg.field.type.c_str(), field.size());
  std::printf("z = %zu\n", z);
  std::printf("tail bound = %s\n", num(field.tail_bound(z)).c_str());
  std::printf("kappa declared = [%s, %s], observed = [%s, %s]\n", num(field.declared_bounds().min).c_str(),
              num(field.declared_bounds().max).c_str(), num(bounds.observed_min).c_str(),
              num(bounds.observed_max).c_str());
  std::printf("mesh: %zu vertices, %zu triangles, %d interior dofs, h = %s\n", mesh->num_vertices(),
              mesh->num_triangles(), mesh->num_dofs(), num(mesh->h()).c_str());
  std::printf("N_t = %d\n", cfg.time.N_t);
  std::printf("gamma = %s\n", num(cfg.gamma()).c_str());
  std::printf("qmc: b = %u, m = %d, beta = %u, N = %zu, genvec = %s\n", cfg.qmc.b, cfg.qmc.m, cfg.qmc.beta,
              cfg.num_points(), cfg.qmc.genvec.c_str());
  echo_config(cfg);
  if (!bounds.ok()) {
    const auto& v = bounds.violations.front();
    fail(ErrorCode::bounds, "diffusivity bound violated (" + std::to_string(bounds.violations.size()) +
                                " reported), e.g. kappa = " + num(v.kappa) + " at x = (" + num(v.x.x) + ", " +
                                num(v.x.y) + ")");
  }
  return 0;
}

int run_estimate(const Common& c) {
  const RunConfig cfg = resolve(c);
  echo_config(cfg);
  log(c, "estimate with N = " + std::to_string(cfg.num_points()));
  const ExpectedValueSeries s = estimate(cfg);
  const fs::path dir = out_dir(cfg);
  {
    auto os = open_output(dir / "series.csv");
    write_series_csv(s, os);
  }
  auto gp = open_output(dir / "series.gp");
  write_gnuplot("series.csv", gp);
  std::printf("E(T) = %s, std(T) = %s, N = %zu, z = %zu\n", num(s.mean.back()).c_str(), num(s.std.back()).c_str(),
              s.N, s.z);
  return 0;
}

int run_table(const Common& c, const std::string& N_text, std::size_t N_ref) {
  RunConfig cfg = resolve(c);
  if (!N_text.empty()) cfg.estimator.N_list = parse_list<std::size_t>(N_text, "N");
  if (N_ref > 0) cfg.estimator.N_ref = N_ref;
  echo_config(cfg);
  const auto rows = convergence_table(cfg, cfg.estimator.N_list, cfg.estimator.N_ref);
  auto os = open_output(out_dir(cfg) / "table.csv");
  write_table_csv(rows, os);
  write_table_csv(rows, std::cout);
  return 0;
}

int run_truncation(const Common& c, const std::string& z_text) {
  RunConfig cfg = resolve(c);
  if (!z_text.empty()) cfg.estimator.z_list = parse_list<std::size_t>(z_text, "z");
  echo_config(cfg);
  const TruncationStudy study = truncation_study(cfg, cfg.estimator.z_list);
  auto os = open_output(out_dir(cfg) / "truncation.csv");
  write_truncation_csv(study, os);
  write_truncation_csv(study, std::cout);
  std::printf("slope = %s\n", num(study.slope).c_str());
  return 0;
}

int run_refine(const Common& c, int levels) {
  RunConfig cfg = resolve(c);
  if (levels > 0) cfg.estimator.levels = levels;
  echo_config(cfg);
  const auto rows = spacetime_refinement_study(cfg, cfg.estimator.levels);
  auto os = open_output(out_dir(cfg) / "refine.csv");
  write_refinement_csv(rows, os);
  write_refinement_csv(rows, std::cout);
  return 0;
}

int run_solve(const Common& c, const std::string& y_text) {
  const RunConfig cfg = resolve(c);
  echo_config(cfg);
  const RunContext ctx(cfg);
  std::vector<double> y(ctx.z, 0.0);
  if (!y_text.empty()) {
    const auto given = parse_list<double>(y_text, "y");
    require(given.size() <= ctx.z, ErrorCode::config, "--y has more entries than z");
    std::copy(given.begin(), given.end(), y.begin());
  }
  const SolutionTrajectory tr = solve_trajectory(*ctx.problem, ParameterVector(y), cfg.output.dump_fields);
  const fs::path dir = out_dir(cfg);
  {
    auto os = open_output(dir / "solve.csv");
    write_trajectory_csv(tr, os);
  }
  if (cfg.output.dump_fields) {
    auto bin = open_output(dir / "states.bin", true);
    write_states_binary(tr.states, bin);
  }
  std::printf("L(u_h(T)) = %s\n", num(tr.functional.back()).c_str());
  return 0;
}

int run_mesh(int n_div, const std::string& out) {
  const TriMesh mesh = triangulate_unit_square(n_div);
  if (out.empty()) {
    write_mesh(mesh, std::cout);
  } else {
    auto os = open_output(out);
    write_mesh(mesh, os);
  }
  return 0;
}

int run_points(const Common& c, unsigned b, int m, unsigned beta, std::size_t z, const std::string& genvec,
               const std::string& save, bool classical, const CLI::App& cmd) {
  InterlacedLatticeRule rule;
  if (!genvec.empty()) {
    rule = load_gen_vector(genvec);
    // explicitly given b, m, beta must agree with the file
    require((!cmd.count("--b") || rule.b == b) && (!cmd.count("--m") || rule.m == m) &&
                (!cmd.count("--beta") || rule.beta == beta),
            ErrorCode::config, "points: --b/--m/--beta do not match the generating-vector file");
    require(rule.z >= z, ErrorCode::config, "points: generating vector shorter than beta * z");
    rule = rule.leading(z);
  } else {
    const RunConfig cfg = load_config(c.config, c.overrides);
    const RandomField field = build_field(cfg);
    require(z <= field.size(), ErrorCode::config, "points: z exceeds the basis length of the configured field");
    require(is_prime(b), ErrorCode::config, "points: b must be prime");
    CbcOptions opts;
    opts.walsh_decay = cfg.qmc.walsh_decay;
    rule = cbc_construct(b, m, beta, cbc_weights_from_field(field, z), opts).rule(b, m, beta);
  }
  if (!save.empty()) save_gen_vector(rule, save);
  const PointSet points =
      classical ? classical_points(rule.b, rule.m, rule.modulus, rule.gen_vector) : rule.points();
  if (c.out.empty()) {
    write_points_csv(points, std::cout);
  } else {
    auto os = open_output(c.out);
    write_points_csv(points, os);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracuq: QMC expected values for time-fractional diffusion with random diffusivity"};
  app.require_subcommand(1);
  Common common;

  auto* check = app.add_subcommand("check", "validate a configuration and print its summary");
  add_common(check, common);
  auto* est = app.add_subcommand("estimate", "QMC estimate of E[L(u_h(t_n))] with std bands");
  add_common(est, common);

  std::string N_text;
  std::size_t N_ref = 0;
  auto* table = app.add_subcommand("table", "convergence table in N against a reference N");
  add_common(table, common);
  table->add_option("--N", N_text, "comma-separated N values (powers of b)");
  table->add_option("--Nref", N_ref, "reference N");

  std::string z_text;
  auto* trunc = app.add_subcommand("truncation", "truncation error against z");
  add_common(trunc, common);
  trunc->add_option("--z", z_text, "comma-separated truncation dimensions");

  int levels = 0;
  auto* refine = app.add_subcommand("refine", "space-time refinement study at y = 0");
  add_common(refine, common);
  refine->add_option("--levels", levels, "number of compared levels");

  std::string y_text;
  auto* solve = app.add_subcommand("solve", "single trajectory; writes n,t,L(u_h(t_n))");
  add_common(solve, common);
  solve->add_option("--y", y_text, "comma-separated leading parameter values (rest zero)");
  solve->add_flag("--dump-fields", common.dump_fields, "also write every state to states.bin");

  int n_div = 32;
  std::string mesh_out;
  auto* mesh = app.add_subcommand("mesh", "structured unit-square mesh in the text mesh format");
  mesh->add_option("--ndiv", n_div, "subdivisions per side");
  mesh->add_option("--out", mesh_out, "output file (default stdout)");

  unsigned b = 2, beta = 3;
  int m = 4;
  std::size_t z = 4;
  std::string genvec, save;
  bool classical = false;
  auto* points = app.add_subcommand("points", "interlaced polynomial lattice points as CSV");
  points->add_option("--config", common.config, "configuration whose field supplies the CBC weights");
  points->add_option("--set", common.overrides, "configuration override (repeatable)");
  points->add_option("--out", common.out, "output file (default stdout)");
  points->add_option("--b", b, "prime base");
  points->add_option("--m", m, "N = b^m");
  points->add_option("--beta", beta, "interlacing factor");
  points->add_option("--z", z, "dimension");
  points->add_option("--genvec", genvec, "generating-vector file (default: fast CBC)");
  points->add_option("--save-genvec", save, "write the generating vector used");
  points->add_flag("--classical", classical, "emit the beta*z classical columns instead");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      fail(ErrorCode::usage, e.what());
    }
    if (*check) return run_check(common);
    if (*est) return run_estimate(common);
    if (*table) return run_table(common, N_text, N_ref);
    if (*trunc) return run_truncation(common, z_text);
    if (*refine) return run_refine(common, levels);
    if (*solve) return run_solve(common, y_text);
    if (*mesh) return run_mesh(n_div, mesh_out);
    if (*points) return run_points(common, b, m, beta, z, genvec, save, classical, *points);
  } catch (const Error& e) {
    std::cerr << "error[" << code_name(e.code()) << "]: " << e.what() << '\n';
    return e.code() == ErrorCode::usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error[E_INTERNAL]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
