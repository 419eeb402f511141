// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [--quick]   (--quick skips the full-scale reference run)

#include <Eigen/SparseCholesky>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fracuq/cbc.hpp"
#include "fracuq/config.hpp"
#include "fracuq/estimator.hpp"
#include "fracuq/lattice.hpp"
#include "fracuq/norms.hpp"
#include "fracuq/output.hpp"
#include "fracuq/parallel.hpp"
#include "fracuq/stepper.hpp"

using namespace fracuq;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string list(const std::vector<double>& v, const char* spec = "%.3f") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i], spec);
  return s;
}

RunConfig config(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return load_config(std::string(FRACUQ_SOURCE_DIR) + "/configs/" + name, overrides);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- criterion 1 and 11: desk-scale convergence table ----

std::string desk_table_csv(unsigned threads, std::vector<ConvergenceRow>* rows_out = nullptr) {
  RunConfig c = config("desk.json");
  c.estimator.threads = threads;
  const auto rows = convergence_table(c, c.estimator.N_list, c.estimator.N_ref);
  if (rows_out) *rows_out = rows;
  std::ostringstream os;
  write_table_csv(rows, os);
  return os.str();
}

std::string desk_csv_threads1;

Outcome qmc_rate_desk() {
  std::vector<ConvergenceRow> rows;
  desk_csv_threads1 = desk_table_csv(1, &rows);
  std::vector<double> rT, rL;
  bool ok = true;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    rT.push_back(rows[k].rate_T);
    rL.push_back(rows[k].rate_L2J);
    ok = ok && rows[k].rate_T >= 1.6 && rows[k].rate_T <= 2.4 && rows[k].rate_L2J >= 1.6 && rows[k].rate_L2J <= 2.4;
  }
  std::vector<double> eT;
  for (const auto& r : rows) eT.push_back(r.err_T);
  return {ok, "rates_T = [" + list(rT) + "], rates_L2J = [" + list(rL) + "], err_T = [" + list(eT, "%.2e") +
                  "], band [1.6, 2.4]"};
}

Outcome determinism() {
  if (desk_csv_threads1.empty()) desk_csv_threads1 = desk_table_csv(1);
  const std::string eight = desk_table_csv(8);
  return {eight == desk_csv_threads1, "table.csv with 1 and 8 threads: " +
                                          std::string(eight == desk_csv_threads1 ? "identical" : "different") + " (" +
                                          std::to_string(eight.size()) + " bytes)"};
}

// ---- criterion 2: full-scale reference value ----

Outcome full_scale_reference() {
  RunConfig c = config("full.json");
  const ExpectedValueSeries s = estimate(c);
  const double e = s.mean.back();
  const double rounded = std::stod(fmt(e, "%.3g"));
  return {rounded == 0.257, "E_{z,512,h}(T) = " + fmt(e, "%.10f") + " -> " + fmt(e, "%.3g") +
                                ", target 0.2573 -> 0.257, |diff| = " + fmt(std::abs(e - 0.2573), "%.2e")};
}

// ---- criterion 3: space-time refinement ----

Outcome spacetime_order() {
  RunConfig c = config("full.json", {"space.n_div=12", "time.N_t=25"});
  const auto rows = spacetime_refinement_study(c, 3);
  std::vector<double> ratios, errs;
  bool ok = true;
  for (const auto& r : rows) {
    errs.push_back(r.err_L2J);
    if (std::isnan(r.ratio)) continue;
    ratios.push_back(r.ratio);
    ok = ok && r.ratio >= 3.2 && r.ratio <= 4.8;
  }
  return {ok, "levels (n_div, N_t) = (12,25) (24,50) (48,100), reference (192,400); L2J errors = [" +
                  list(errs, "%.3e") + "], ratios = [" + list(ratios) + "], band [3.2, 4.8]"};
}

// ---- criterion 4: Crank-Nicolson limit ----

Outcome crank_nicolson() {
  RunConfig c = config("desk.json", {"model.alpha=0.999999", "time.gamma=1", "estimator.solver=direct"});
  const RunContext ctx(c);
  const SpaceTimeProblem& p = *ctx.problem;
  std::vector<double> yv(ctx.z);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double& v : yv) v = u(rng);
  const ParameterVector y(yv);
  const SolutionTrajectory tr = solve_trajectory(p, y, true);

  // independent load vector for f = 1: integral of each hat function
  const TriMesh& mesh = p.mesh();
  Vector F = Vector::Zero(p.dofs());
  for (const auto& t : mesh.triangles()) {
    const Point2 a = mesh.vertices()[t[0]], b = mesh.vertices()[t[1]], d = mesh.vertices()[t[2]];
    const double area = 0.5 * std::abs((b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y));
    for (int k = 0; k < 3; ++k)
      if (const int i = mesh.interior_index()[t[k]]; i >= 0) F[i] += area / 3.0;
  }
  // M (U^n - U^{n-1}) / tau + D (U^n + U^{n-1}) / 2 = F
  const SparseMatrix D = p.assembler().assemble(yv);
  const SparseMatrix& M = p.mass();
  const GradedTimeMesh& tm = p.time_mesh();
  const double tau = tm.tau(1);
  Eigen::SimplicialLDLT<SparseMatrix> lhs(SparseMatrix(M / tau + 0.5 * D));
  std::vector<Vector> cn{tr.states[0]};
  for (int n = 1; n <= tm.steps(); ++n) cn.push_back(cn.back() + lhs.solve(F - D * cn.back()));
  std::vector<Vector> diff(cn.size());
  for (std::size_t n = 0; n < cn.size(); ++n) diff[n] = tr.states[n] - cn[n];
  const double rel = l2J_norm(diff, tm, M) / l2J_norm(cn, tm, M);
  return {rel <= 1e-4, "alpha = 1 - 1e-6, uniform N_t = 50, n_div = 24: relative L2(J,L2) difference = " +
                           fmt(rel, "%.3e") + " (limit 1e-4)"};
}

// ---- criterion 5: weights against nested quadrature ----

double quadrature_weight(double alpha, const GradedTimeMesh& tm, int n, int j) {
  static boost::math::quadrature::tanh_sinh<double> ts;
  const double tn = tm.tau(n), tj = tm.tau(j);
  double value;
  if (j == n) {
    value = ts.integrate(
        [&](double r) { return ts.integrate([&](double w) { return std::pow(w, -alpha); }, 0.0, r, 1e-15); }, 0.0,
        tn, 1e-14);
  } else {
    const double b = tm.t(n - 1) - tm.t(j);
    value = ts.integrate(
        [&](double u) { return ts.integrate([&](double v) { return std::pow(b + u + v, -alpha); }, 0.0, tj, 1e-15); },
        0.0, tn, 1e-14);
  }
  return value / (std::tgamma(1.0 - alpha) * tn * tj);
}

Outcome weight_oracle() {
  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> ua(0.02, 0.98), ug(1.0, 6.0);
  std::uniform_int_distribution<int> un(1, 20);
  double worst = 0.0;
  bool positive = true;
  int pairs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = ua(rng), gamma = ug(rng);
    const int N = un(rng);
    const GradedTimeMesh tm = graded_mesh(1.0, N, gamma);
    const HistoryWeights W(tm, alpha);
    for (int n = 1; n <= N; ++n)
      for (int j = 1; j <= n; ++j) {
        positive = positive && W(n, j) > 0.0;
        const double q = quadrature_weight(alpha, tm, n, j);
        worst = std::max(worst, std::abs(W(n, j) - q) / q);
        ++pairs;
      }
  }
  return {positive && worst <= 1e-9, "50 configurations, " + std::to_string(pairs) +
                                         " weights: max relative difference = " + fmt(worst, "%.2e") +
                                         " (limit 1e-9), all positive: " + (positive ? "yes" : "no")};
}

// ---- criterion 6: uniform-mesh Toeplitz identity ----

Outcome toeplitz_identity() {
  double worst = 0.0;
  int count = 0;
  for (double alpha : {0.05, 0.25, 0.5, 0.75, 0.95})
    for (double tau : {1e-4, 0.01, 0.5}) {
      const int N = 60;
      const GradedTimeMesh tm = graded_mesh(tau * N, N, 1.0);
      const HistoryWeights W(tm, alpha);
      const long double w = std::pow(static_cast<long double>(tau), -static_cast<long double>(alpha)) /
                            std::tgamma(3.0L - alpha);
      const long double nu = 2.0L - alpha;
      for (int n = 1; n <= N; ++n)
        for (int j = 1; j <= n; ++j) {
          const int k = n - j;
          const long double g =
              k == 0 ? 1.0L
                     : std::pow(k + 1.0L, nu) - 2.0L * std::pow(static_cast<long double>(k), nu) + std::pow(k - 1.0L, nu);
          const double expect = static_cast<double>(w * g);
          worst = std::max(worst, std::abs(W(n, j) - expect) / expect);
          ++count;
        }
    }
  return {worst <= 1e-12, std::to_string(count) + " weights at gamma = 1: max relative difference = " +
                              fmt(worst, "%.2e") + " (limit 1e-12)"};
}

// ---- criterion 7: point-set properties ----

Outcome point_set_properties() {
  bool columns = true;
  int sets = 0;
  for (int m = 1; m <= 4; ++m) {
    const std::uint64_t N = std::uint64_t{1} << m;
    for (std::uint64_t Pc = N; Pc < 2 * N; ++Pc) {
      const GFPoly P = GFPoly::from_code(2, Pc);
      if (!is_irreducible(P)) continue;
      std::vector<GFPoly> g;
      for (std::uint64_t c = 1; c < N; ++c) g.push_back(GFPoly::from_code(2, c));
      const PointSet p = classical_points(2, m, P, g);
      ++sets;
      for (std::size_t j = 0; j < p.dim; ++j) {
        std::vector<double> col(N);
        for (std::size_t i = 0; i < N; ++i) col[i] = p(i, j);
        std::sort(col.begin(), col.end());
        for (std::uint64_t k = 0; k < N; ++k) columns = columns && col[k] == static_cast<double>(k) / N;
      }
    }
  }
  bool injective = true;
  for (unsigned m = 1; m <= 4; ++m)
    for (unsigned beta = 1; beta <= 3; ++beta) {
      const std::uint64_t N = std::uint64_t{1} << m, count = std::uint64_t{1} << (m * beta);
      PointSet p{2, m, static_cast<std::size_t>(count), beta, {}, ""};
      for (std::uint64_t i = 0; i < count; ++i)
        for (unsigned j = 0; j < beta; ++j) p.mantissa.push_back((i >> (m * j)) % N);
      const PointSet q = interlace(p, beta);
      injective = injective && std::set<std::uint64_t>(q.mantissa.begin(), q.mantissa.end()).size() == count;
    }
  bool unit_mean = true;
  for (int m = 1; m <= 10; ++m)
    for (unsigned beta = 1; beta <= 3; ++beta) {
      const PointSet p = cbc_construct(2, m, beta, {0.5, 0.25, 0.125}).rule(2, m, beta).points();
      const std::vector<double> ones(p.size, 1.0);
      unit_mean = unit_mean && pairwise_sum(ones) / static_cast<double>(p.size) == 1.0;
    }
  return {columns && injective && unit_mean,
          "columns {k/N} for all " + std::to_string(sets) + " (m <= 4, P irreducible) sets: " +
              (columns ? "yes" : "no") + "; interlacing injective for beta <= 3, m <= 4: " +
              (injective ? "yes" : "no") + "; QMC mean of 1 equals 1: " + (unit_mean ? "yes" : "no")};
}

// ---- criterion 8: CBC against exhaustive search ----

double walsh_series(std::uint64_t mantissa, unsigned digits, double lambda) {
  auto bit = [&](unsigned i) { return i <= digits ? (mantissa >> (digits - i)) & 1u : 0u; };
  double s = 0.0;
  for (unsigned a = 1; a <= 60; ++a) {
    bool leading_zero = true;
    for (unsigned i = 1; i < a; ++i) leading_zero = leading_zero && bit(i) == 0;
    if (!leading_zero) break;
    s += std::pow(2.0, -lambda * a) * std::pow(2.0, a - 1.0) * (bit(a) ? -1.0 : 1.0);
  }
  return s;
}

// figure of merit by explicit summation over block subsets and orders
double brute_merit(const PointSet& P, unsigned beta, const std::vector<double>& bj, double lambda) {
  const std::size_t blocks = (P.dim + beta - 1) / beta;
  double total = 0.0;
  for (std::size_t n = 0; n < P.size; ++n) {
    std::vector<double> Phi(blocks);
    for (std::size_t j = 0; j < blocks; ++j) {
      double prod = 1.0;
      for (std::size_t l = j * beta; l < std::min<std::size_t>((j + 1) * beta, P.dim); ++l)
        prod *= 1.0 + walsh_series(P.raw(n, l), P.digits, lambda);
      Phi[j] = prod - 1.0;
    }
    for (unsigned u = 1; u < (1u << blocks); ++u) {
      std::vector<std::size_t> idx;
      for (std::size_t j = 0; j < blocks; ++j)
        if (u >> j & 1u) idx.push_back(j);
      std::vector<unsigned> nu(idx.size(), 1);
      while (true) {
        unsigned order = 0;
        double w = 1.0;
        for (std::size_t i = 0; i < idx.size(); ++i) {
          order += nu[i];
          w *= (nu[i] == beta ? 2.0 : 1.0) * std::pow(bj[idx[i]], nu[i]) * Phi[idx[i]];
        }
        total += std::tgamma(order + 1.0) * w;
        std::size_t i = 0;
        while (i < idx.size() && nu[i] == beta) nu[i++] = 1;
        if (i == idx.size()) break;
        ++nu[i];
      }
    }
  }
  return total / static_cast<double>(P.size);
}

Outcome cbc_oracle() {
  const RandomField desk = build_field(config("desk.json"));
  const std::vector<std::vector<double>> weight_sets{{0.9, 0.5, 0.3}, cbc_weights_from_field(desk, 3)};
  int components = 0, misses = 0;
  double worst = 0.0;
  for (const auto& bj : weight_sets)
    for (int m = 1; m <= 6; ++m)
      for (unsigned beta : {1u, 2u, 3u}) {
        const double lambda = default_walsh_decay(beta);
        const CbcResult r = cbc_construct(2, m, beta, bj);
        const GFPoly P = default_modulus(2, m);
        std::vector<GFPoly> prefix;
        for (std::size_t c = 0; c < r.gen_vector.size(); ++c) {
          double best = INFINITY, chosen = NAN;
          for (std::uint64_t cand = 1; cand < (std::uint64_t{1} << m); ++cand) {
            auto g = prefix;
            g.push_back(GFPoly::from_code(2, cand));
            const double e = brute_merit(classical_points(2, m, P, g), beta, bj, lambda);
            best = std::min(best, e);
            if (g.back() == r.gen_vector[c]) chosen = e;
          }
          const double rel = (chosen - best) / best;
          worst = std::max(worst, rel);
          if (!(rel <= 1e-9)) ++misses;
          ++components;
          prefix.push_back(r.gen_vector[c]);
        }
      }
  return {misses == 0, std::to_string(components) +
                           " components (m <= 6, dim <= 3, beta <= 3, two weight sets): chosen merit above the "
                           "exhaustive minimum by at most " +
                           fmt(worst, "%.1e") + " relative, " + std::to_string(misses) + " misses"};
}

// ---- criterion 9: truncation decay ----

Outcome truncation_decay() {
  RunConfig c = config("full.json", {"qmc.m=7", "space.n_div=16"});
  const TruncationStudy st = truncation_study(c, c.estimator.z_list);
  RunConfig c2 = config("full.json", {"qmc.m=8", "space.n_div=16"});
  const TruncationStudy st2 = truncation_study(c2, c2.estimator.z_list);
  std::vector<double> errs;
  for (const auto& r : st.rows) errs.push_back(r.err_T);
  return {st.slope <= -0.7, "N = 128, n_div = 16, z_ref = 253: errors = [" + list(errs, "%.2e") +
                                "], fitted slope = " + fmt(st.slope, "%.3f") + " (need <= -1.0 + 0.3); N = 256 slope = " +
                                fmt(st2.slope, "%.3f") + " (informational)"};
}

// ---- criterion 10: fast history ----

Outcome fast_history() {
  RunConfig direct = config("desk.json", {"time.N_t=400"});
  RunConfig fast = direct;
  fast.estimator.fast_history = true;
  fast.estimator.history_tol = 1e-8;
  const RunContext dctx(direct), fctx(fast);
  const auto points = centred_points(build_rule(direct, dctx.field, dctx.z, 2).points(), dctx.z);
  double worst = 0.0, t_direct = 0.0, t_fast = 0.0;
  for (const auto& y : points) {
    auto t0 = std::chrono::steady_clock::now();
    const double a = solve_trajectory(*dctx.problem, y).functional.back();
    t_direct += seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const double b = solve_trajectory(*fctx.problem, y).functional.back();
    t_fast += seconds_since(t0);
    worst = std::max(worst, std::abs(a - b) / std::abs(a));
  }
  return {worst <= 1e-7, "N_t = 400, n_div = 24, eps = 1e-8, 4 parameter points: max relative difference at T = " +
                             fmt(worst, "%.2e") + " (limit 1e-7); speedup " + fmt(t_direct / t_fast, "%.2f") +
                             "x (informational, exponentials: " + std::to_string(fctx.problem->exp_sum()->size()) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--quick") {
      quick = true;
    } else {
      std::fprintf(stderr, "usage: acceptance [--quick]\n");
      return 2;
    }
  }

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    bool long_run = false;
  };
  const std::vector<Criterion> criteria{
      {1, "qmc-rate-desk", qmc_rate_desk},
      {2, "full-scale-reference", full_scale_reference, true},
      {3, "spacetime-order-2", spacetime_order},
      {4, "crank-nicolson-limit", crank_nicolson},
      {5, "weight-quadrature-oracle", weight_oracle},
      {6, "uniform-toeplitz-identity", toeplitz_identity},
      {7, "point-set-properties", point_set_properties},
      {8, "cbc-exhaustive-minimum", cbc_oracle},
      {9, "truncation-decay", truncation_decay},
      {10, "fast-history", fast_history},
      {11, "thread-determinism", determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (quick && c.long_run) {
      std::printf("SKIP %2d %-27s skipped by --quick\n", c.id, c.name);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %-27s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
