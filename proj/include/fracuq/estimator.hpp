#pragma once

// QMC estimates of E[L(u_h(t_n))] and the convergence studies built on them.

#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "fracuq/assembly.hpp"
#include "fracuq/cbc.hpp"
#include "fracuq/config.hpp"
#include "fracuq/error.hpp"
#include "fracuq/field.hpp"
#include "fracuq/lattice.hpp"
#include "fracuq/mesh.hpp"
#include "fracuq/norms.hpp"
#include "fracuq/parallel.hpp"
#include "fracuq/stepper.hpp"

namespace fracuq {

struct ExpectedValueSeries {
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> std;
  std::size_t N = 0;
  std::size_t z = 0;
  double h = 0.0;
  int N_t = 0;
};

struct ConvergenceRow {
  std::size_t N = 0;
  double value_T = 0.0;
  double err_T = 0.0;
  double rate_T = std::numeric_limits<double>::quiet_NaN();
  double err_L2J = 0.0;
  double rate_L2J = std::numeric_limits<double>::quiet_NaN();
};

struct TruncationRow {
  std::size_t z = 0;
  double err_T = 0.0;
};

struct TruncationStudy {
  std::vector<TruncationRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();  // least-squares fit of log err against log z
};

struct RefinementRow {
  int level = 0;
  int n_div = 0;
  int N_t = 0;
  double h = 0.0;
  double err_L2J = 0.0;
  double err_T = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();  // err of previous level / err of this level
};

inline RandomField build_field(const RunConfig& c) {
  if (c.field.type == "example") return build_example_field(c.field.q, c.field.psi_divisor, c.field.sort_by_norm);
  RandomField f = make_sine_table_field(c.field.kappa0, c.field.coeffs, c.field.p);
  return c.field.sort_by_norm ? f.sorted_by_norm() : f;
}

inline std::size_t truncation_dim(const RunConfig& c, const RandomField& field) {
  const std::size_t z = c.field.z.value_or(field.size());
  require(z <= field.size(), ErrorCode::config, "config: field.z exceeds the basis length");
  return z;
}

inline std::shared_ptr<const TriMesh> build_mesh(const RunConfig& c, int n_div) {
  if (!c.space.mesh.empty()) return std::make_shared<const TriMesh>(read_mesh(c.space.mesh));
  return std::make_shared<const TriMesh>(triangulate_unit_square(n_div));
}

inline InitialData build_initial(const RunConfig& c) {
  return c.model.initial == "bump" ? bump_initial_data() : zero_initial_data();
}

/// f = 1, f = 0, or the steady source -div(kappa0 grad g) that makes u = g an exact solution.
inline SourceFunction build_source(const RunConfig& c, const RandomField& field) {
  if (c.model.source == "one") return [](Point2, double) { return 1.0; };
  if (c.model.source == "zero") return [](Point2, double) { return 0.0; };
  const InitialData g = build_initial(c);
  auto d2 = [g](Point2 p, int axis) {  // second derivative of g along an axis
    const double e = 1e-4;
    Point2 a = p, b = p;
    (axis == 0 ? a.x : a.y) -= e;
    (axis == 0 ? b.x : b.y) += e;
    return (g.gradient(b)[axis] - g.gradient(a)[axis]) / (2.0 * e);
  };
  const ScalarField kappa0 = field.mean();
  return [=](Point2 p, double) {
    const double e = 1e-6;
    const double kx = (kappa0({p.x + e, p.y}) - kappa0({p.x - e, p.y})) / (2.0 * e);
    const double ky = (kappa0({p.x, p.y + e}) - kappa0({p.x, p.y - e})) / (2.0 * e);
    const Vec2 dg = g.gradient(p);
    return -(kx * dg[0] + ky * dg[1] + kappa0(p) * (d2(p, 0) + d2(p, 1)));
  };
}

/// Generating vector from the configured source: fast CBC with weights from the
/// field, or a file whose first beta*z components are used.
inline InterlacedLatticeRule build_rule(const RunConfig& c, const RandomField& field, std::size_t z, int m) {
  require(z >= 1, ErrorCode::config, "qmc: need at least one random dimension");
  if (c.qmc.genvec == "cbc") {
    CbcOptions opts;
    opts.walsh_decay = c.qmc.walsh_decay;
    const CbcResult r = cbc_construct(c.qmc.b, m, c.qmc.beta, cbc_weights_from_field(field, z), opts);
    return r.rule(c.qmc.b, m, c.qmc.beta);
  }
  InterlacedLatticeRule rule = load_gen_vector(c.qmc.genvec);
  require(rule.b == c.qmc.b && rule.m == m && rule.beta == c.qmc.beta, ErrorCode::config,
          "qmc: generating-vector file does not match b, m, beta of the configuration");
  require(rule.z >= z, ErrorCode::config, "qmc: generating vector shorter than beta * z");
  return rule.leading(z);
}

inline std::unique_ptr<SpaceTimeProblem> build_problem(const RunConfig& c, const RandomField& field, std::size_t z,
                                                       std::shared_ptr<const TriMesh> mesh, int N_t) {
  return std::make_unique<SpaceTimeProblem>(std::move(mesh), field, z, GradedTimeMesh(c.model.T, N_t, c.gamma()),
                                            c.model.alpha, build_source(c, field), build_initial(c),
                                            c.solver_options());
}

inline unsigned resolve_threads(const RunConfig& c) {
  return c.estimator.threads > 0 ? c.estimator.threads : default_thread_count();
}

/// Functional series L(u_h(t_n)) for every parameter point, in a slot array indexed by sample.
inline std::vector<std::vector<double>> sample_functionals(const SpaceTimeProblem& problem,
                                                           const std::vector<ParameterVector>& points,
                                                           unsigned threads) {
  std::vector<std::vector<double>> slots(points.size());
  parallel_for(
      points.size(), threads, [&] { return TrajectorySolver(problem); },
      [&](TrajectorySolver& solver, std::size_t i) { slots[i] = solver.solve(points[i]).functional; });
  return slots;
}

/// Equal-weight mean and unbiased standard deviation per level, summed pairwise in sample order.
inline ExpectedValueSeries reduce_samples(const std::vector<std::vector<double>>& slots,
                                          const GradedTimeMesh& time_mesh) {
  require(!slots.empty(), ErrorCode::config, "estimate: no samples");
  ExpectedValueSeries s;
  const std::size_t N = slots.size(), L = slots[0].size();
  s.t = time_mesh.levels();
  s.mean.resize(L);
  s.std.resize(L);
  s.N = N;
  s.N_t = time_mesh.steps();
  std::vector<double> col(N);
  for (std::size_t n = 0; n < L; ++n) {
    for (std::size_t i = 0; i < N; ++i) col[i] = slots[i][n];
    const double mean = pairwise_sum(col) / static_cast<double>(N);
    // shifted by the first sample so that identical samples give exactly zero
    const double shift = slots[0][n];
    for (std::size_t i = 0; i < N; ++i) col[i] = slots[i][n] - shift;
    const double dmean = pairwise_sum(col) / static_cast<double>(N);
    for (std::size_t i = 0; i < N; ++i) col[i] = (col[i] - dmean) * (col[i] - dmean);
    s.mean[n] = mean;
    s.std[n] = N > 1 ? std::sqrt(pairwise_sum(col) / static_cast<double>(N - 1)) : 0.0;
  }
  return s;
}

/// Shifted QMC points restricted to their first z coordinates.
inline std::vector<ParameterVector> centred_points(const PointSet& points, std::size_t z) {
  std::vector<ParameterVector> out;
  out.reserve(points.size);
  for (std::size_t i = 0; i < points.size; ++i) {
    std::vector<double> y(z);
    for (std::size_t j = 0; j < z; ++j) y[j] = points(i, j) - 0.5;
    out.emplace_back(std::move(y));
  }
  return out;
}

/// Everything needed to run estimates for one configuration.
struct RunContext {
  RunConfig config;
  RandomField field;
  std::size_t z;
  std::shared_ptr<const TriMesh> mesh;
  std::unique_ptr<SpaceTimeProblem> problem;

  explicit RunContext(const RunConfig& c)
      : config(c), field(build_field(c)), z(truncation_dim(c, field)), mesh(build_mesh(c, c.space.n_div)) {
    problem = build_problem(c, field, z, mesh, c.time.N_t);
  }

  ExpectedValueSeries estimate_with(const std::vector<ParameterVector>& points) const {
    ExpectedValueSeries s =
        reduce_samples(sample_functionals(*problem, points, resolve_threads(config)), problem->time_mesh());
    s.z = points.front().active_dim();
    s.h = mesh->h();
    return s;
  }
  ExpectedValueSeries estimate_with(const PointSet& points, std::size_t z_used) const {
    return estimate_with(centred_points(points, z_used));
  }

  ExpectedValueSeries estimate_m(int m) const {
    if (z == 0)  // deterministic diffusivity: every sample is the same trajectory
      return estimate_with(std::vector<ParameterVector>(ipow(config.qmc.b, static_cast<unsigned>(m)),
                                                        ParameterVector::zero(0)));
    return estimate_with(build_rule(config, field, z, m).points(), z);
  }
};

inline ExpectedValueSeries estimate(const RunConfig& config) {
  const RunContext ctx(config);
  return ctx.estimate_m(config.qmc.m);
}

/// Exponent m with b^m = N.
inline int exponent_of(std::size_t N, unsigned b) {
  int m = 0;
  std::size_t v = 1;
  while (v < N) {
    v *= b;
    ++m;
  }
  require(v == N && m >= 1, ErrorCode::config, "N = " + std::to_string(N) + " is not a positive power of b");
  return m;
}

inline std::vector<ConvergenceRow> convergence_table(const RunConfig& config, const std::vector<std::size_t>& N_list,
                                                     std::size_t N_ref) {
  require(!N_list.empty(), ErrorCode::config, "table: empty N list");
  for (std::size_t N : N_list) require(N <= N_ref, ErrorCode::config, "table: N_ref must not be below any N");
  const RunContext ctx(config);
  const ExpectedValueSeries ref = ctx.estimate_m(exponent_of(N_ref, config.qmc.b));
  const GradedTimeMesh& tm = ctx.problem->time_mesh();
  std::vector<ConvergenceRow> rows;
  for (std::size_t k = 0; k < N_list.size(); ++k) {
    const ExpectedValueSeries s = N_list[k] == N_ref ? ref : ctx.estimate_m(exponent_of(N_list[k], config.qmc.b));
    require(s.t == ref.t, ErrorCode::config, "table: time grids differ between rows");
    ConvergenceRow row;
    row.N = N_list[k];
    row.value_T = s.mean.back();
    row.err_T = std::abs(s.mean.back() - ref.mean.back());
    std::vector<double> diff(s.mean.size());
    for (std::size_t n = 0; n < diff.size(); ++n) diff[n] = s.mean[n] - ref.mean[n];
    row.err_L2J = l2J_norm(diff, tm);
    if (k > 0) {
      const double scale = std::log(static_cast<double>(N_list[k]) / static_cast<double>(N_list[k - 1]));
      row.rate_T = std::log(rows.back().err_T / row.err_T) / scale;
      row.rate_L2J = std::log(rows.back().err_L2J / row.err_L2J) / scale;
    }
    rows.push_back(row);
  }
  return rows;
}

/// Least-squares slope of log(err) against log(z) over the rows with err > 0.
inline double fitted_slope(const std::vector<TruncationRow>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : rows)
    if (r.err_T > 0.0 && r.z > 0) {
      const double x = std::log(static_cast<double>(r.z)), y = std::log(r.err_T);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// |E_z(T) - E_{z_ref}(T)| with z_ref the configured truncation and one rule shared by all rows.
inline TruncationStudy truncation_study(const RunConfig& config, const std::vector<std::size_t>& z_list) {
  const RunContext ctx(config);
  require(ctx.z >= 1, ErrorCode::config, "truncation: field has no random dimensions");
  for (std::size_t z : z_list)
    require(z >= 1 && z <= ctx.z, ErrorCode::config, "truncation: z values must lie in [1, z_ref]");
  const PointSet points = build_rule(config, ctx.field, ctx.z, config.qmc.m).points();
  const double ref = ctx.estimate_with(points, ctx.z).mean.back();
  TruncationStudy study;
  for (std::size_t z : z_list) {
    const double v = z == ctx.z ? ref : ctx.estimate_with(points, z).mean.back();
    study.rows.push_back({z, std::abs(v - ref)});
  }
  study.slope = fitted_slope(study.rows);
  return study;
}

namespace detail {

/// Value at p of the P1 function on the structured n_div mesh with interior coefficients u.
inline double eval_structured_p1(const TriMesh& mesh, int n_div, const Vector& u, Point2 p) {
  const int n1 = n_div + 1;
  const int i = std::min(n_div - 1, static_cast<int>(std::floor(p.x * n_div)));
  const int j = std::min(n_div - 1, static_cast<int>(std::floor(p.y * n_div)));
  const double s = p.x * n_div - i, t = p.y * n_div - j;
  auto val = [&](int v) {
    const int d = mesh.interior_index()[v];
    return d >= 0 ? u[d] : 0.0;
  };
  const int a = j * n1 + i, b = a + 1, c = a + n1, d = c + 1;
  if (s >= t) return (1.0 - s) * val(a) + (s - t) * val(b) + t * val(d);
  return (1.0 - t) * val(a) + (t - s) * val(c) + s * val(d);
}

}  // namespace detail

/// Deterministic diffusivity kappa(., 0); level l uses (n_div 2^l, N_t 2^l) and the
/// reference is two further doublings beyond the finest level. Coarse solutions are
/// carried to the reference grid exactly (nested meshes, linear in time).
inline std::vector<RefinementRow> spacetime_refinement_study(const RunConfig& config, int levels) {
  require(levels >= 2, ErrorCode::config, "refine: need at least two levels");
  require(config.space.mesh.empty(), ErrorCode::validation,
          "refine: nested interpolation needs the structured unit-square mesh");
  const RandomField field = build_field(config);
  const std::size_t z = truncation_dim(config, field);
  const ParameterVector y = ParameterVector::zero(z);

  auto solve_level = [&](int l) {
    const int n_div = config.space.n_div << l, N_t = config.time.N_t << l;
    auto mesh = build_mesh(config, n_div);
    auto problem = build_problem(config, field, z, mesh, N_t);
    SolutionTrajectory tr = solve_trajectory(*problem, y, true);
    return std::make_pair(std::move(problem), std::move(tr));
  };

  const int ref_level = levels + 1;
  const auto [ref_problem, ref] = solve_level(ref_level);
  const TriMesh& fine = ref_problem->mesh();
  const GradedTimeMesh& ftm = ref_problem->time_mesh();

  std::vector<RefinementRow> rows;
  for (int l = 0; l < levels; ++l) {
    const auto [problem, tr] = solve_level(l);
    const int n_div = config.space.n_div << l;
    const int r = 1 << (ref_level - l);
    const GradedTimeMesh& ctm = problem->time_mesh();
    // coarse states on the fine spatial grid, one per coarse level
    std::vector<Vector> lifted(tr.states.size(), Vector(fine.num_dofs()));
    for (std::size_t n = 0; n < tr.states.size(); ++n)
      for (std::size_t v = 0; v < fine.num_vertices(); ++v) {
        const int d = fine.interior_index()[v];
        if (d >= 0) lifted[n][d] = detail::eval_structured_p1(problem->mesh(), n_div, tr.states[n], fine.vertices()[v]);
      }
    std::vector<Vector> err(ftm.steps() + 1);
    for (int k = 0; k <= ftm.steps(); ++k) {
      const int n = std::min(k / r, ctm.steps() - 1);
      const double theta = (ftm.t(k) - ctm.t(n)) / ctm.tau(n + 1);
      err[k] = (1.0 - theta) * lifted[n] + theta * lifted[n + 1] - ref.states[k];
    }
    RefinementRow row;
    row.level = l;
    row.n_div = n_div;
    row.N_t = ctm.steps();
    row.h = problem->mesh().h();
    row.err_L2J = l2J_norm(err, ftm, ref_problem->mass());
    row.err_T = std::abs(tr.functional.back() - ref.functional.back());
    if (!rows.empty()) row.ratio = rows.back().err_L2J / row.err_L2J;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fracuq
