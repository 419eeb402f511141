#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

#include "fracuq/assembly.hpp"
#include "fracuq/mesh.hpp"

using namespace fracuq;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& A) { return Eigen::MatrixXd(A); }

// Hat function of vertex (i0, j0) on the structured mesh with diagonals along (1,1).
InitialData hat(int n_div, int i0, int j0, double scale) {
  auto local = [=](Point2 p) { return std::array<double, 2>{p.x * n_div - i0, p.y * n_div - j0}; };
  auto value = [=](Point2 p) {
    const auto [s, t] = local(p);
    return scale * std::max(0.0, 1.0 - std::max({std::abs(s), std::abs(t), std::abs(s - t)}));
  };
  auto grad = [=](Point2 p) -> Vec2 {
    const auto [s, t] = local(p);
    const double as = std::abs(s), at = std::abs(t), ad = std::abs(s - t);
    if (std::max({as, at, ad}) >= 1.0) return {0.0, 0.0};
    const double k = -scale * n_div;
    if (as >= at && as >= ad) return {k * (s > 0 ? 1 : -1), 0.0};
    if (at >= ad) return {0.0, k * (t > 0 ? 1 : -1)};
    const double sg = s - t > 0 ? 1 : -1;
    return {k * sg, -k * sg};
  };
  return {value, grad};
}

InitialData sum(InitialData a, InitialData b) {
  return {[=](Point2 p) { return a.value(p) + b.value(p); },
          [=](Point2 p) {
            const Vec2 ga = a.gradient(p), gb = b.gradient(p);
            return Vec2{ga[0] + gb[0], ga[1] + gb[1]};
          }};
}

RandomField constant_field(double c) { return RandomField([c](Point2) { return c; }, {}, {}, {c, c}, 0.55); }

}  // namespace

TEST(Mesh, StructuredCounts) {
  const TriMesh m1 = triangulate_unit_square(1);
  EXPECT_EQ(m1.num_triangles(), 2u);
  EXPECT_EQ(m1.num_dofs(), 0);
  const TriMesh m4 = triangulate_unit_square(4);
  EXPECT_EQ(m4.num_vertices(), 25u);
  EXPECT_EQ(m4.num_triangles(), 32u);
  EXPECT_EQ(m4.num_dofs(), 9);
  EXPECT_NEAR(m4.h(), std::sqrt(2.0) / 4, 1e-15);
  const TriMesh m53 = triangulate_unit_square(53);
  EXPECT_NEAR(m53.h(), 0.026683, 1e-6);
  EXPECT_EQ(m53.num_dofs(), 52 * 52);
}

TEST(Mesh, TrianglesAreCounterclockwiseAndCoverSquare) {
  const TriMesh m = triangulate_unit_square(7);
  double total = 0.0;
  for (std::size_t k = 0; k < m.num_triangles(); ++k) {
    EXPECT_GT(m.area(k), 0.0);
    total += m.area(k);
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(Mesh, ClockwiseInputIsReoriented) {
  const TriMesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 2, 1}}, {true, true, true});
  EXPECT_NEAR(m.area(0), 0.5, 1e-15);
}

TEST(Mesh, DegenerateTriangleRejected) {
  EXPECT_THROW(TriMesh({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}, {true, true, true}), Error);
}

TEST(Mesh, TextRoundTrip) {
  const TriMesh m = triangulate_unit_square(3);
  std::stringstream ss;
  write_mesh(m, ss);
  const TriMesh back = read_mesh(ss);
  EXPECT_EQ(back.num_vertices(), m.num_vertices());
  EXPECT_EQ(back.triangles(), m.triangles());
  EXPECT_EQ(back.boundary(), m.boundary());
  EXPECT_EQ(back.num_dofs(), m.num_dofs());
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    EXPECT_EQ(back.vertices()[v].x, m.vertices()[v].x);
    EXPECT_EQ(back.vertices()[v].y, m.vertices()[v].y);
  }
}

TEST(Mesh, MalformedTextIsParseError) {
  std::istringstream is("3\n0 0 1\n1 0 1\n");
  try {
    read_mesh(is);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse);
  }
}

TEST(Mass, ReferenceTriangleDiagonal) {
  const TriMesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {true, true, true});
  const Eigen::MatrixXd M = dense(assemble_mass(m, DofScope::all));
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(M(i, i), 1.0 / 12.0, 1e-16);
    for (int j = 0; j < 3; ++j)
      if (i != j) EXPECT_NEAR(M(i, j), 1.0 / 24.0, 1e-16);
  }
}

TEST(Mass, PartitionOfUnity) {
  for (int n : {1, 3, 8}) EXPECT_NEAR(dense(assemble_mass(triangulate_unit_square(n), DofScope::all)).sum(), 1.0, 1e-14);
}

TEST(Mass, SymmetricPositiveDefinite) {
  for (int n = 2; n <= 8; ++n) {
    const Eigen::MatrixXd M = dense(assemble_mass(triangulate_unit_square(n)));
    EXPECT_EQ((M - M.transpose()).cwiseAbs().maxCoeff(), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Stiffness, UnitDiffusivityRowSumsVanish) {
  const TriMesh m = triangulate_unit_square(6);
  const Eigen::MatrixXd D = dense(assemble_stiffness(m, constant_field(1.0), ParameterVector{}, DofScope::all));
  EXPECT_LT(D.rowwise().sum().cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Stiffness, ScalesWithConstantDiffusivity) {
  const TriMesh m = triangulate_unit_square(5);
  const Eigen::MatrixXd D1 = dense(assemble_stiffness(m, constant_field(1.0), ParameterVector{}));
  const Eigen::MatrixXd D3 = dense(assemble_stiffness(m, constant_field(2.5), ParameterVector{}));
  EXPECT_LT((D3 - 2.5 * D1).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Stiffness, ExactSymmetryAndPositiveDefinite) {
  const TriMesh m = triangulate_unit_square(8);
  const RandomField f = build_example_field(4);
  const Eigen::MatrixXd D = dense(assemble_stiffness(m, f, ParameterVector(std::vector<double>(10, -0.5))));
  EXPECT_EQ((D - D.transpose()).cwiseAbs().maxCoeff(), 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Stiffness, AffineInParameter) {
  const TriMesh m = triangulate_unit_square(6);
  const RandomField f = build_example_field(3);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> y1(6), y2(6), ym(6);
    const double a = 0.5 + 0.5 * u(rng);
    for (int j = 0; j < 6; ++j) {
      y1[j] = u(rng), y2[j] = u(rng);
      ym[j] = a * y1[j] + (1 - a) * y2[j];
    }
    const Eigen::MatrixXd lhs = dense(assemble_stiffness(m, f, ParameterVector(ym)));
    const Eigen::MatrixXd rhs = a * dense(assemble_stiffness(m, f, ParameterVector(y1))) +
                                (1 - a) * dense(assemble_stiffness(m, f, ParameterVector(y2)));
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Stiffness, FluctuationPartIndependentOfMean) {
  const TriMesh m = triangulate_unit_square(6);
  const std::vector<SineTerm> terms{{1, 1, 0.05}, {2, 1, 0.03}, {1, 3, 0.02}};
  const RandomField a = make_sine_table_field({0.2, 0.0, 0.0, 0.1}, terms);
  const RandomField b = make_sine_table_field({1.0, 0.5, 0.0, 0.0}, terms);
  const ParameterVector y({0.4, -0.3, 0.1});
  const Eigen::MatrixXd da = dense(assemble_stiffness(m, a, y)) - dense(assemble_stiffness(m, a, ParameterVector::zero(3)));
  const Eigen::MatrixXd db = dense(assemble_stiffness(m, b, y)) - dense(assemble_stiffness(m, b, ParameterVector::zero(3)));
  EXPECT_LT((da - db).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Stiffness, NonpositiveDiffusivityIsSolverError) {
  const TriMesh m = triangulate_unit_square(4);
  const RandomField f([](Point2) { return 0.1; }, {[](Point2) { return 0.3; }}, {0.3}, {0.1, 0.1}, 0.55);
  try {
    assemble_stiffness(m, f, ParameterVector({-0.5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::solver);
  }
}

TEST(Load, ConstantSourceIntegratesToArea) {
  const TriMesh m = triangulate_unit_square(5);
  const SourceFunction one = [](Point2, double) { return 1.0; };
  EXPECT_NEAR(load_vector(m, one, 0.0, 0.3, DofScope::all).sum(), 1.0, 1e-14);
  const SourceFunction zero = [](Point2, double) { return 0.0; };
  EXPECT_EQ(load_vector(m, zero, 0.0, 1.0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Load, TimeAverageOfLinearSource) {
  const TriMesh m = triangulate_unit_square(5);
  const Vector v1 = load_vector(m, [](Point2, double) { return 1.0; }, 0.0, 1.0);
  const Vector vt = load_vector(m, [](Point2, double t) { return t; }, 0.0, 1.0);
  EXPECT_LT((vt - 0.5 * v1).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Functional, WeightsAndValues) {
  const TriMesh m = triangulate_unit_square(6);
  EXPECT_EQ(apply_functional(m, Vector::Zero(m.num_dofs())), 0.0);
  EXPECT_NEAR(functional_weights(m, DofScope::all).sum(), 1.0, 1e-14);
  // a single interior hat integrates to its patch area / 3 = 1/n^2
  Vector e = Vector::Zero(m.num_dofs());
  e[0] = 1.0;
  EXPECT_NEAR(apply_functional(m, e), 1.0 / 36.0, 1e-15);
}

TEST(Functional, InterpolantOfBumpHasUnitMean) {
  const TriMesh m = triangulate_unit_square(64);
  const InitialData g = bump_initial_data();
  const std::vector<double> values = m.interpolate(g.value);
  const Vector u = Eigen::Map<const Vector>(values.data(), m.num_dofs());
  EXPECT_NEAR(apply_functional(m, u), 1.0, 2e-3);
}

TEST(Ritz, ReproducesDiscreteFunctions) {
  const int n = 6;
  const TriMesh m = triangulate_unit_square(n);
  const RandomField f = build_example_field(3);
  const InitialData g = sum(hat(n, 2, 3, 1.5), hat(n, 4, 1, -0.7));
  const Vector u = ritz_projection(m, f, ParameterVector({0.3, -0.2, 0.5, 0.1, -0.4, 0.2}), g);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const int d = m.interior_index()[v];
    if (d >= 0) EXPECT_NEAR(u[d], g.value(m.vertices()[v]), 1e-12);
  }
}

TEST(Ritz, ZeroDataGivesZero) {
  const TriMesh m = triangulate_unit_square(5);
  const Vector u = ritz_projection(m, build_example_field(2), ParameterVector::zero(3), zero_initial_data());
  EXPECT_EQ(u.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Ritz, GalerkinOrthogonality) {
  const TriMesh m = triangulate_unit_square(12);
  const RandomField f = build_example_field(4);
  const ParameterVector y({0.5, -0.5, 0.2, 0.1, -0.3, 0.4, 0.0, 0.2, -0.1, 0.3});
  const StiffnessAssembler A(m, f, 10);
  const InitialData g = bump_initial_data();
  const Vector u = ritz_projection(A, m, y.coords(), g);
  const Vector rhs = ritz_rhs(m, A.pattern(), A.kappa_at_quadrature(y.coords()), g);
  const SparseMatrix D = A.assemble(y);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 20; ++k) {
    Vector v(m.num_dofs());
    for (auto& c : v) c = nd(rng);
    const double a = rhs.dot(v), b = (D * u).dot(v);
    EXPECT_NEAR(a, b, 1e-10 * std::abs(rhs.dot(v.cwiseAbs())) + 1e-14);
  }
}

TEST(Ritz, BumpMeanConvergesAtSecondOrder) {
  const RandomField f = build_example_field(3);
  std::vector<double> err;
  for (int n : {8, 16, 32, 64}) {
    const TriMesh m = triangulate_unit_square(n);
    err.push_back(std::abs(apply_functional(m, ritz_projection(m, f, ParameterVector::zero(6), bump_initial_data())) - 1.0));
  }
  for (std::size_t k = 1; k < err.size(); ++k) {
    const double rate = std::log2(err[k - 1] / err[k]);
    EXPECT_GT(rate, 1.7);
    EXPECT_LT(rate, 2.3);
  }
  EXPECT_LT(err.back(), 2e-3);
}
