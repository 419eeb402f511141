#pragma once

// L2(J) and L2(J, L2(Omega)) norms of piecewise-linear-in-time series.

#include <cmath>
#include <vector>

#include "fracuq/assembly.hpp"
#include "fracuq/error.hpp"
#include "fracuq/time_mesh.hpp"

namespace fracuq {

/// Exact integral of the squared linear interpolant: sum tau_n (a^2 + ab + b^2) / 3.
inline double l2J_norm(const std::vector<double>& series, const GradedTimeMesh& mesh) {
  require(series.size() == static_cast<std::size_t>(mesh.steps() + 1), ErrorCode::validation,
          "l2J_norm: series length must be N_t + 1");
  double s = 0.0;
  for (int n = 1; n <= mesh.steps(); ++n) {
    const double a = series[n - 1], b = series[n];
    s += mesh.tau(n) * (a * a + a * b + b * b) / 3.0;
  }
  return std::sqrt(s);
}

/// Same with the spatial L2 norm taken through the mass matrix.
inline double l2J_norm(const std::vector<Vector>& series, const GradedTimeMesh& mesh, const SparseMatrix& M) {
  require(series.size() == static_cast<std::size_t>(mesh.steps() + 1), ErrorCode::validation,
          "l2J_norm: series length must be N_t + 1");
  double s = 0.0;
  Vector Ma = M * series[0];
  for (int n = 1; n <= mesh.steps(); ++n) {
    const Vector& a = series[n - 1];
    const Vector& b = series[n];
    const Vector Mb = M * b;
    s += mesh.tau(n) * (a.dot(Ma) + a.dot(Mb) + b.dot(Mb)) / 3.0;
    Ma = Mb;
  }
  return std::sqrt(std::max(0.0, s));
}

}  // namespace fracuq
