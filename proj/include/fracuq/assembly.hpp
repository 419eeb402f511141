#pragma once

// P1 mass, stochastic stiffness, load vectors, Ritz projection and the
// mean-value functional on a TriMesh.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "fracuq/error.hpp"
#include "fracuq/field.hpp"
#include "fracuq/mesh.hpp"

namespace fracuq {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// interior: Dirichlet dofs eliminated; all: every vertex is a dof (untrimmed operators).
enum class DofScope { interior, all };

/// Three-point Gauss rule on a triangle, exact for quadratics.
inline constexpr std::array<std::array<double, 3>, 3> kTriangleRule{{
    {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
    {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
    {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0},
}};

/// Sparsity pattern of the P1 operators plus, for every element entry (a,b),
/// the position of its value in the compressed storage. Assembling through the
/// slots in fixed element order keeps every matrix exactly symmetric.
class DofPattern {
 public:
  DofPattern(const TriMesh& mesh, DofScope scope) : scope_(scope) {
    const std::size_t nv = mesh.num_vertices();
    dof_.resize(nv);
    for (std::size_t v = 0; v < nv; ++v)
      dof_[v] = scope == DofScope::all ? static_cast<int>(v) : mesh.interior_index()[v];
    n_ = scope == DofScope::all ? static_cast<int>(nv) : mesh.num_dofs();

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * mesh.num_triangles());
    for (const auto& t : mesh.triangles())
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          if (dof_[t[a]] >= 0 && dof_[t[b]] >= 0) trip.emplace_back(dof_[t[a]], dof_[t[b]], 1.0);
    pattern_.resize(n_, n_);
    pattern_.setFromTriplets(trip.begin(), trip.end());
    pattern_.makeCompressed();

    slots_.assign(9 * mesh.num_triangles(), -1);
    const int* outer = pattern_.outerIndexPtr();
    const int* inner = pattern_.innerIndexPtr();
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
      const auto& t = mesh.triangles()[k];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const int row = dof_[t[a]], col = dof_[t[b]];
          if (row < 0 || col < 0) continue;
          const int* pos = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
          slots_[9 * k + 3 * a + b] = static_cast<int>(pos - inner);
        }
    }
  }

  DofScope scope() const { return scope_; }
  int size() const { return n_; }
  int dof(int vertex) const { return dof_[vertex]; }
  int slot(std::size_t element, int a, int b) const { return slots_[9 * element + 3 * a + b]; }

  /// A zero matrix with this pattern.
  SparseMatrix zero_matrix() const {
    SparseMatrix m = pattern_;
    std::fill(m.valuePtr(), m.valuePtr() + m.nonZeros(), 0.0);
    return m;
  }

 private:
  DofScope scope_;
  int n_ = 0;
  std::vector<int> dof_;
  std::vector<int> slots_;
  SparseMatrix pattern_;
};

inline SparseMatrix assemble_mass(const TriMesh& mesh, DofScope scope = DofScope::interior) {
  const DofPattern pattern(mesh, scope);
  SparseMatrix M = pattern.zero_matrix();
  double* val = M.valuePtr();
  for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
    const double area = mesh.area(k);
    require(area > 0.0, ErrorCode::validation, "assemble_mass: degenerate element");
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int s = pattern.slot(k, a, b);
        if (s >= 0) val[s] += area / 12.0 * (a == b ? 2.0 : 1.0);
      }
  }
  return M;
}

/// w_p = integral of phi_p; L(u_h) = w . U.
inline Vector functional_weights(const TriMesh& mesh, DofScope scope = DofScope::interior) {
  const DofPattern pattern(mesh, scope);
  Vector w = Vector::Zero(pattern.size());
  for (std::size_t k = 0; k < mesh.num_triangles(); ++k)
    for (int a = 0; a < 3; ++a) {
      const int p = pattern.dof(mesh.triangles()[k][a]);
      if (p >= 0) w[p] += mesh.area(k) / 3.0;
    }
  return w;
}

/// Mean value of u_h over the domain: sum_p U_p integral(phi_p).
inline double apply_functional(const TriMesh& mesh, const Vector& coeffs) {
  require(coeffs.size() == mesh.num_dofs(), ErrorCode::validation, "apply_functional: size mismatch");
  return functional_weights(mesh).dot(coeffs);
}

/// Assembles D(y) = integral kappa(x,y) grad phi_p . grad phi_q with kappa averaged
/// over the three Gauss points of each element. kappa at the quadrature points is
/// kappa0 + Psi y with Psi precomputed once per (mesh, field, z).
class StiffnessAssembler {
 public:
  StiffnessAssembler(const TriMesh& mesh, const RandomField& field, std::size_t z,
                     DofScope scope = DofScope::interior)
      : mesh_(&mesh), pattern_(mesh, scope), z_(z) {
    require(z <= field.size(), ErrorCode::config, "stiffness: z exceeds basis length");
    const std::size_t E = mesh.num_triangles();
    kappa0_.resize(3 * E);
    psi_.resize(3 * E, static_cast<Eigen::Index>(z));
    local_.resize(6 * E);
    for (std::size_t k = 0; k < E; ++k) {
      for (int q = 0; q < 3; ++q) {
        const auto& l = kTriangleRule[q];
        const Point2 x = mesh.barycentric_point(k, l[0], l[1], l[2]);
        kappa0_[3 * k + q] = field.kappa0(x);
        for (std::size_t j = 0; j < z; ++j) psi_(3 * k + q, j) = field.basis(j)(x);
      }
      const auto g = mesh.gradients(k);
      const double area = mesh.area(k);
      int i = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) local_[6 * k + i++] = area * dot(g[a], g[b]);
    }
  }

  const DofPattern& pattern() const { return pattern_; }
  std::size_t active_dim() const { return z_; }

  /// kappa(x_q, y) at every quadrature point; y entries beyond z are ignored.
  Vector kappa_at_quadrature(std::span<const double> y) const {
    const std::size_t zz = std::min(z_, y.size());
    Vector kq = kappa0_;
    if (zz > 0) {
      const Eigen::Map<const Vector> ym(y.data(), static_cast<Eigen::Index>(zz));
      kq.noalias() += psi_.leftCols(static_cast<Eigen::Index>(zz)) * ym;
    }
    for (Eigen::Index i = 0; i < kq.size(); ++i)
      require(kq[i] > 0.0, ErrorCode::solver, "stiffness: nonpositive diffusivity at a quadrature point");
    return kq;
  }

  SparseMatrix assemble(std::span<const double> y) const {
    SparseMatrix D = pattern_.zero_matrix();
    assemble_into(y, D);
    return D;
  }
  SparseMatrix assemble(const ParameterVector& y) const { return assemble(y.coords()); }

  /// Overwrites the values of D (which must carry this assembler's pattern).
  void assemble_into(std::span<const double> y, SparseMatrix& D) const {
    const Vector kq = kappa_at_quadrature(y);
    double* val = D.valuePtr();
    std::fill(val, val + D.nonZeros(), 0.0);
    for (std::size_t k = 0; k < mesh_->num_triangles(); ++k) {
      const double kbar = (kq[3 * k] + kq[3 * k + 1] + kq[3 * k + 2]) / 3.0;
      int i = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b, ++i) {
          const double v = kbar * local_[6 * k + i];
          const int s = pattern_.slot(k, a, b);
          if (s < 0) continue;
          val[s] += v;
          if (a != b) val[pattern_.slot(k, b, a)] += v;
        }
    }
  }

 private:
  const TriMesh* mesh_;
  DofPattern pattern_;
  std::size_t z_;
  Vector kappa0_;
  Eigen::MatrixXd psi_;
  std::vector<double> local_;  // area grad phi_a . grad phi_b, upper triangle
};

inline SparseMatrix assemble_stiffness(const TriMesh& mesh, const RandomField& field, const ParameterVector& y,
                                       DofScope scope = DofScope::interior) {
  require(y.active_dim() <= field.size(), ErrorCode::config, "assemble_stiffness: z exceeds basis length");
  return StiffnessAssembler(mesh, field, y.active_dim(), scope).assemble(y);
}

using SourceFunction = std::function<double(Point2, double)>;

/// <f_bar, phi_p> with f_bar the time average of f over (t_a, t_b) by two-point Gauss.
inline Vector load_vector(const TriMesh& mesh, const SourceFunction& f, double t_a, double t_b,
                          DofScope scope = DofScope::interior) {
  require(t_a < t_b, ErrorCode::domain, "load_vector: need t_a < t_b");
  const DofPattern pattern(mesh, scope);
  const double mid = 0.5 * (t_a + t_b), half = 0.5 * (t_b - t_a), off = half / std::sqrt(3.0);
  Vector F = Vector::Zero(pattern.size());
  for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
    const double area = mesh.area(k);
    for (const auto& l : kTriangleRule) {
      const Point2 x = mesh.barycentric_point(k, l[0], l[1], l[2]);
      const double fbar = 0.5 * (f(x, mid - off) + f(x, mid + off));
      if (fbar == 0.0) continue;
      for (int a = 0; a < 3; ++a) {
        const int p = pattern.dof(mesh.triangles()[k][a]);
        if (p >= 0) F[p] += area / 3.0 * fbar * l[a];
      }
    }
  }
  return F;
}

/// Initial datum g with an optional closed-form gradient.
struct InitialData {
  std::function<double(Point2)> value;
  std::function<Vec2(Point2)> gradient;  // empty: gradient of the P1 interpolant
};

/// g(x) = 144 x1^2 (1 - x1) x2^2 (1 - x2), normalised to unit mean on the unit square.
inline InitialData bump_initial_data() {
  auto s = [](double t) { return t * t * (1.0 - t); };
  auto ds = [](double t) { return 2.0 * t - 3.0 * t * t; };
  return {[=](Point2 p) { return 144.0 * s(p.x) * s(p.y); },
          [=](Point2 p) { return Vec2{144.0 * ds(p.x) * s(p.y), 144.0 * s(p.x) * ds(p.y)}; }};
}

inline InitialData zero_initial_data() {
  return {[](Point2) { return 0.0; }, [](Point2) { return Vec2{0.0, 0.0}; }};
}

/// rhs_p = integral kappa grad g . grad phi_p, with kappa given at the quadrature points.
inline Vector ritz_rhs(const TriMesh& mesh, const DofPattern& pattern, const Vector& kappa_q,
                       const InitialData& g) {
  Vector rhs = Vector::Zero(pattern.size());
  std::vector<double> gv;
  if (!g.gradient) {
    gv.resize(mesh.num_vertices());
    for (std::size_t v = 0; v < gv.size(); ++v) gv[v] = g.value(mesh.vertices()[v]);
  }
  for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
    const auto& t = mesh.triangles()[k];
    const auto grad = mesh.gradients(k);
    const double area = mesh.area(k);
    Vec2 gh{0.0, 0.0};
    if (!g.gradient)
      for (int a = 0; a < 3; ++a) {
        gh[0] += gv[t[a]] * grad[a][0];
        gh[1] += gv[t[a]] * grad[a][1];
      }
    for (int q = 0; q < 3; ++q) {
      const auto& l = kTriangleRule[q];
      const Vec2 dg = g.gradient ? g.gradient(mesh.barycentric_point(k, l[0], l[1], l[2])) : gh;
      const double wk = area / 3.0 * kappa_q[3 * k + q];
      for (int a = 0; a < 3; ++a) {
        const int p = pattern.dof(t[a]);
        if (p >= 0) rhs[p] += wk * dot(dg, grad[a]);
      }
    }
  }
  return rhs;
}

inline Vector ritz_projection(const StiffnessAssembler& assembler, const TriMesh& mesh,
                              std::span<const double> y, const InitialData& g) {
  const SparseMatrix D = assembler.assemble(y);
  const Vector rhs = ritz_rhs(mesh, assembler.pattern(), assembler.kappa_at_quadrature(y), g);
  if (rhs.size() == 0) return rhs;
  Eigen::SimplicialLLT<SparseMatrix> llt(D);
  require(llt.info() == Eigen::Success, ErrorCode::solver, "ritz_projection: stiffness factorisation failed");
  return llt.solve(rhs);
}

inline Vector ritz_projection(const TriMesh& mesh, const RandomField& field, const ParameterVector& y,
                              const InitialData& g) {
  const StiffnessAssembler assembler(mesh, field, y.active_dim());
  return ritz_projection(assembler, mesh, y.coords(), g);
}

}  // namespace fracuq
