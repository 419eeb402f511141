#pragma once

// Graded-mesh time stepping for the Caputo problem in matrix form,
//
//   S^n V^n = F^n - D U^(n-1) - sum_{j<n} w_nj M V^j,   S^n = w_nn M + D/2,
//   U^n = U^(n-1) + V^n,  U^0 = Ritz projection of g.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracuq/assembly.hpp"
#include "fracuq/error.hpp"
#include "fracuq/exp_sum.hpp"
#include "fracuq/field.hpp"
#include "fracuq/mesh.hpp"
#include "fracuq/time_mesh.hpp"
#include "fracuq/weights.hpp"

namespace fracuq {

enum class LinearSolver { automatic, direct, pcg };

struct SolverOptions {
  LinearSolver method = LinearSolver::automatic;
  double cg_tolerance = 1e-10;   // relative residual in the M-norm
  int cg_max_iterations = 1000;
  int direct_max_dofs = 2000;    // automatic: direct factorisation up to this size
  bool fast_history = false;
  double history_tolerance = 1e-8;
};

using Cholesky = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

/// Factorisations of omega_{3-alpha}(tau)/tau^2 M + D(0)/2 on the decade grid
/// tau = 10^l covering [tau_min, tau_max].
class DecadePreconditioners {
 public:
  DecadePreconditioners(const SparseMatrix& M, const SparseMatrix& D0, double alpha, double tau_min,
                        double tau_max) {
    lo_ = static_cast<int>(std::floor(std::log10(tau_min)));
    const int hi = static_cast<int>(std::ceil(std::log10(tau_max)));
    for (int l = lo_; l <= hi; ++l) {
      const double tau = std::pow(10.0, l);
      SparseMatrix S = omega(3.0 - alpha, tau) / (tau * tau) * M + 0.5 * D0;
      auto f = std::make_unique<Cholesky>(S);
      require(f->info() == Eigen::Success, ErrorCode::solver, "preconditioner factorisation failed");
      factors_.push_back(std::move(f));
    }
  }

  std::size_t size() const { return factors_.size(); }
  int lowest_exponent() const { return lo_; }

  /// Index of argmin_l |tau - 10^l|.
  std::size_t select(double tau) const {
    std::size_t best = 0;
    double dist = INFINITY;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const double d = std::abs(tau - std::pow(10.0, lo_ + static_cast<int>(i)));
      if (d < dist) {
        dist = d;
        best = i;
      }
    }
    return best;
  }
  const Cholesky& factor(std::size_t i) const { return *factors_[i]; }

 private:
  int lo_ = 0;
  std::vector<std::unique_ptr<Cholesky>> factors_;
};

struct CgResult {
  int iterations = 0;
  double residual = 0.0;
};

/// Preconditioned CG on A x = b stopped at ||r||_M <= tol ||b||_M; x is the initial guess.
inline CgResult pcg(const SparseMatrix& A, const Vector& b, Vector& x, const Cholesky& P, const SparseMatrix& M,
                    double tol, int max_iter) {
  auto mnorm = [&](const Vector& v) { return std::sqrt(std::max(0.0, v.dot(M * v))); };
  const double bnorm = mnorm(b);
  CgResult res;
  if (bnorm == 0.0) {
    x.setZero();
    return res;
  }
  Vector r = b - A * x;
  res.residual = mnorm(r) / bnorm;
  if (res.residual <= tol) return res;
  Vector zv = P.solve(r);
  Vector p = zv, Ap(b.size());
  double rz = r.dot(zv);
  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    Ap.noalias() = A * p;
    const double step = rz / p.dot(Ap);
    x += step * p;
    r -= step * Ap;
    res.residual = mnorm(r) / bnorm;
    if (res.residual <= tol) return res;
    zv = P.solve(r);
    const double rz_new = r.dot(zv);
    p = zv + (rz_new / rz) * p;
    rz = rz_new;
  }
  fail(ErrorCode::solver, "pcg: no convergence, relative residual " + std::to_string(res.residual));
}

/// Everything shared by the trajectories of one run; immutable once built.
class SpaceTimeProblem {
 public:
  SpaceTimeProblem(std::shared_ptr<const TriMesh> mesh, const RandomField& field, std::size_t z,
                   GradedTimeMesh time_mesh, double alpha, const SourceFunction& f, InitialData g,
                   SolverOptions options = {})
      : mesh_(std::move(mesh)),
        assembler_(*mesh_, field, z),
        time_(std::move(time_mesh)),
        weights_(time_, alpha),
        alpha_(alpha),
        g_(std::move(g)),
        options_(options) {
    M_ = assemble_mass(*mesh_);
    functional_ = functional_weights(*mesh_);
    loads_.resize(time_.steps() + 1);
    for (int n = 1; n <= time_.steps(); ++n) loads_[n] = load_vector(*mesh_, f, time_.t(n - 1), time_.t(n));
    use_pcg_ = options_.method == LinearSolver::pcg ||
               (options_.method == LinearSolver::automatic && mesh_->num_dofs() > options_.direct_max_dofs);
    if (use_pcg_ && mesh_->num_dofs() > 0) {
      const SparseMatrix D0 = assembler_.assemble(std::span<const double>{});
      preconditioners_.emplace(M_, D0, alpha, time_.min_step(), time_.max_step());
    }
    // kernel accuracy a decade below the target, since sign changes in the
    // history can amplify the relative error of the sum
    if (options_.fast_history && time_.steps() >= 3)
      exp_sum_.emplace(exp_sum_kernel(alpha, time_.min_step(), time_.T(), 0.1 * options_.history_tolerance));
  }

  SpaceTimeProblem(const SpaceTimeProblem&) = delete;
  SpaceTimeProblem& operator=(const SpaceTimeProblem&) = delete;

  const TriMesh& mesh() const { return *mesh_; }
  const StiffnessAssembler& assembler() const { return assembler_; }
  const GradedTimeMesh& time_mesh() const { return time_; }
  const HistoryWeights& weights() const { return weights_; }
  double alpha() const { return alpha_; }
  const SparseMatrix& mass() const { return M_; }
  const Vector& functional() const { return functional_; }
  const Vector& load(int n) const { return loads_[n]; }
  const InitialData& initial_data() const { return g_; }
  const SolverOptions& options() const { return options_; }
  bool uses_pcg() const { return use_pcg_; }
  const DecadePreconditioners* preconditioners() const { return preconditioners_ ? &*preconditioners_ : nullptr; }
  const ExpSum* exp_sum() const { return exp_sum_ ? &*exp_sum_ : nullptr; }
  int dofs() const { return mesh_->num_dofs(); }

 private:
  std::shared_ptr<const TriMesh> mesh_;
  StiffnessAssembler assembler_;
  GradedTimeMesh time_;
  HistoryWeights weights_;
  double alpha_;
  InitialData g_;
  SolverOptions options_;
  SparseMatrix M_;
  Vector functional_;
  std::vector<Vector> loads_;
  bool use_pcg_ = false;
  std::optional<DecadePreconditioners> preconditioners_;
  std::optional<ExpSum> exp_sum_;
};

struct SolutionTrajectory {
  std::vector<double> t;           // levels t_0..t_N
  std::vector<double> functional;  // L(u_h(t_n))
  std::vector<Vector> states;      // U^0..U^N when requested
  int cg_iterations = 0;
};

/// Per-worker solver state; reusable across parameter vectors.
class TrajectorySolver {
 public:
  explicit TrajectorySolver(const SpaceTimeProblem& problem) : p_(&problem) {
    const int d = problem.dofs();
    const int N = problem.time_mesh().steps();
    D_ = problem.assembler().pattern().zero_matrix();
    S_ = D_;
    history_.resize(d, N + 1);
    if (const ExpSum* es = problem.exp_sum()) H_ = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(es->size()));
    if (d > 0) {
      ritz_.analyzePattern(D_);
      if (!problem.uses_pcg()) direct_.analyzePattern(S_);
    }
  }

  /// Resets to level 0 with U^0 = R_h g for the diffusivity kappa(., y).
  void begin(std::span<const double> y) {
    const auto& A = p_->assembler();
    A.assemble_into(y, D_);
    n_ = 0;
    cg_iterations_ = 0;
    if (p_->dofs() == 0) {
      U_.resize(0);
      return;
    }
    ritz_.factorize(D_);
    require(ritz_.info() == Eigen::Success, ErrorCode::solver, "ritz projection: stiffness factorisation failed");
    U_ = ritz_.solve(ritz_rhs(p_->mesh(), A.pattern(), A.kappa_at_quadrature(y), p_->initial_data()));
    if (H_.size()) H_.setZero();
  }

  int level() const { return n_; }
  const Vector& state() const { return U_; }
  int cg_iterations() const { return cg_iterations_; }

  /// Advances from level n-1 to n and returns U^n.
  const Vector& step() {
    const int n = ++n_;
    require(n <= p_->time_mesh().steps(), ErrorCode::domain, "step: beyond final level");
    if (p_->dofs() == 0) return U_;
    const auto& W = p_->weights();
    const SparseMatrix& M = p_->mass();
    Vector rhs = p_->load(n) - D_ * U_;
    rhs -= history_sum(n);

    const double wnn = W.diagonal(n);
    const double* mv = M.valuePtr();
    const double* dv = D_.valuePtr();
    double* sv = S_.valuePtr();
    for (Eigen::Index i = 0; i < S_.nonZeros(); ++i) sv[i] = wnn * mv[i] + 0.5 * dv[i];

    Vector V;
    if (p_->uses_pcg()) {
      const DecadePreconditioners& P = *p_->preconditioners();
      V = n >= 2 ? last_increment_ : Vector::Zero(p_->dofs());  // previous increment as initial guess
      const auto r = pcg(S_, rhs, V, P.factor(P.select(p_->time_mesh().tau(n))), M, p_->options().cg_tolerance,
                         p_->options().cg_max_iterations);
      cg_iterations_ += r.iterations;
    } else {
      direct_.factorize(S_);
      require(direct_.info() == Eigen::Success, ErrorCode::solver, "step: S^n is not positive definite");
      V = direct_.solve(rhs);
    }
    history_.col(n) = M * V;
    last_increment_ = V;
    U_ += V;
    return U_;
  }

  SolutionTrajectory solve(std::span<const double> y, bool store_states = false) {
    const auto& tm = p_->time_mesh();
    SolutionTrajectory out;
    out.t = tm.levels();
    out.functional.reserve(tm.steps() + 1);
    begin(y);
    auto record = [&] {
      out.functional.push_back(p_->dofs() ? p_->functional().dot(U_) : 0.0);
      if (store_states) out.states.push_back(U_);
    };
    record();
    for (int n = 1; n <= tm.steps(); ++n) {
      step();
      record();
    }
    out.cg_iterations = cg_iterations_;
    return out;
  }
  SolutionTrajectory solve(const ParameterVector& y, bool store_states = false) {
    return solve(y.coords(), store_states);
  }

  /// sum_{j<n} w_nj M V^j, with j <= n-2 from the exponential sum when enabled.
  Vector history_sum(int n) {
    const auto& W = p_->weights();
    if (n <= 1) return Vector::Zero(p_->dofs());
    const ExpSum* es = p_->exp_sum();
    if (!es) return direct_history_sum(n);
    const auto& tm = p_->time_mesh();
    Vector out = W(n, n - 1) * history_.col(n - 1);
    if (n >= 3) {
      // H^n = exp(-a tau_(n-1)) (H^(n-1) + q_(n-2) M V^(n-2))
      const Eigen::Index K = static_cast<Eigen::Index>(es->size());
      Eigen::RowVectorXd q(K);
      Eigen::VectorXd decay(K), coef(K);
      const double tj = tm.tau(n - 2), tprev = tm.tau(n - 1), tn = tm.tau(n);
      for (Eigen::Index k = 0; k < K; ++k) {
        const double a = es->rate[k];
        q[k] = -std::expm1(-a * tj) / (a * tj);
        decay[k] = std::exp(-a * tprev);
        coef[k] = es->weight[k] * (-std::expm1(-a * tn)) / (a * tn);
      }
      H_.noalias() += history_.col(n - 2) * q;
      H_ *= decay.asDiagonal();
      out.noalias() += H_ * coef;
    }
    return out;
  }

  Vector direct_history_sum(int n) const {
    if (n <= 1) return Vector::Zero(p_->dofs());
    const Eigen::Map<const Vector> w(p_->weights().row(n).data() + 1, n - 1);
    return history_.middleCols(1, n - 1) * w;
  }

  /// Stores M V^j directly (used by the history tests).
  void set_history(int j, const Vector& mv) { history_.col(j) = mv; }

 private:
  const SpaceTimeProblem* p_;
  SparseMatrix D_, S_;
  Cholesky ritz_, direct_;
  Eigen::MatrixXd history_;  // column j = M V^j
  Eigen::MatrixXd H_;
  Vector U_, last_increment_;
  int n_ = 0;
  int cg_iterations_ = 0;
};

inline SolutionTrajectory solve_trajectory(const SpaceTimeProblem& problem, const ParameterVector& y,
                                           bool store_states = false) {
  TrajectorySolver solver(problem);
  return solver.solve(y, store_states);
}

}  // namespace fracuq
