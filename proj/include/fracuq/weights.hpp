#pragma once

// Convolution weights of the time-stepping scheme,
//
//   w_nj = 1/(tau_n tau_j) int_{I_n} int_{I_j} omega_{1-alpha}(t - s) ds dt,  j < n,
//   w_nn = omega_{3-alpha}(tau_n) / tau_n^2.
//
// The double integral equals the second difference of omega_{3-alpha} over the
// four corner gaps. Evaluated naively that difference cancels badly on graded
// meshes, so it is computed in one of two stable forms depending on the gap
// b = t_(n-1) - t_j between the two intervals.

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <vector>

#include "fracuq/error.hpp"
#include "fracuq/time_mesh.hpp"

namespace fracuq {

inline void check_alpha(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::domain, "fractional order alpha must lie in (0,1)");
}

/// int_{I_n} int_{I_j} omega_{1-alpha}(t - s) ds dt for intervals of lengths
/// tau_n (later) and tau_j (earlier) separated by a gap b >= 0.
inline double kernel_double_integral(double alpha, double tau_n, double tau_j, double b) {
  const double nu = 2.0 - alpha;
  const double e = 1.0 - alpha;
  const double short_len = std::min(tau_n, tau_j);
  if (b < short_len) {
    // second difference of x^nu written as sum sigma_i x_i expm1(e ln x_i) on
    // normalised gaps, which removes the O(1) parts exactly
    const double s = b + tau_n + tau_j;
    const double x[4] = {1.0, (b + tau_n) / s, (b + tau_j) / s, b / s};
    const double sigma[4] = {1.0, -1.0, -1.0, 1.0};
    double acc = 0.0;
    for (int i = 0; i < 4; ++i)
      if (x[i] > 0.0) acc += sigma[i] * x[i] * std::expm1(e * std::log(x[i]));
    return std::pow(s, nu) * acc / std::tgamma(3.0 - alpha);
  }
  // integrate the exact inner integral over the shorter interval; the integrand
  // omega_{2-alpha}(u + L) - omega_{2-alpha}(u) is positive and smooth there
  const double long_len = std::max(tau_n, tau_j);
  auto inner = [&](double u) { return std::pow(u, e) * std::expm1(e * std::log1p(long_len / u)); };
  const double half = 0.5 * short_len, mid = b + half;
  const double q = boost::math::quadrature::gauss<double, 20>::integrate(
      [&](double r) { return inner(mid + half * r); }, -1.0, 1.0);
  return half * q / std::tgamma(2.0 - alpha);
}

/// Toeplitz generator of the uniform-mesh weights, g_j = (j+1)^nu - 2 j^nu + (j-1)^nu
/// with nu = 2 - alpha, and g_0 = 1.
inline double uniform_generator(double alpha, int j) {
  if (j == 0) return 1.0;
  return kernel_double_integral(alpha, 1.0, 1.0, static_cast<double>(j - 1)) * std::tgamma(3.0 - alpha);
}

/// Full lower-triangular table of weights w_nj, 1 <= j <= n <= N_t.
class HistoryWeights {
 public:
  HistoryWeights(const GradedTimeMesh& mesh, double alpha) : alpha_(alpha) {
    check_alpha(alpha);
    const int N = mesh.steps();
    rows_.resize(N + 1);
    for (int n = 1; n <= N; ++n) {
      auto& row = rows_[n];
      row.resize(n + 1, 0.0);
      const double tn = mesh.tau(n);
      for (int j = 1; j < n; ++j) {
        const double tj = mesh.tau(j);
        const double b = mesh.t(n - 1) - mesh.t(j);
        row[j] = kernel_double_integral(alpha, tn, tj, b) / (tn * tj);
      }
      row[n] = omega(3.0 - alpha, tn) / (tn * tn);
    }
  }

  double alpha() const { return alpha_; }
  int steps() const { return static_cast<int>(rows_.size()) - 1; }
  double operator()(int n, int j) const { return rows_[n][j]; }
  double diagonal(int n) const { return rows_[n][n]; }
  /// Entries 0..n of row n (index 0 unused).
  const std::vector<double>& row(int n) const { return rows_[n]; }

 private:
  double alpha_;
  std::vector<std::vector<double>> rows_;
};

inline std::vector<double> history_weights(const GradedTimeMesh& mesh, double alpha, int n) {
  require(n >= 1 && n <= mesh.steps(), ErrorCode::domain, "history_weights: n out of range");
  check_alpha(alpha);
  std::vector<double> row(n);
  for (int j = 1; j < n; ++j) {
    const double b = mesh.t(n - 1) - mesh.t(j);
    row[j - 1] = kernel_double_integral(alpha, mesh.tau(n), mesh.tau(j), b) / (mesh.tau(n) * mesh.tau(j));
  }
  row[n - 1] = omega(3.0 - alpha, mesh.tau(n)) / (mesh.tau(n) * mesh.tau(n));
  return row;
}

}  // namespace fracuq
