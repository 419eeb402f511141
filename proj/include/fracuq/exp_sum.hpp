#pragma once

// Exponential-sum surrogate omega_{1-alpha}(t) ~ sum_k c_k exp(-a_k t) on [delta, T],
// from the trapezoidal rule applied to
//
//   omega_{1-alpha}(t) = sin(pi alpha)/pi int_R exp(alpha x - e^x t) dx.

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "fracuq/error.hpp"
#include "fracuq/time_mesh.hpp"

namespace fracuq {

struct ExpSum {
  std::vector<double> rate;    // a_k
  std::vector<double> weight;  // c_k
  double delta = 0.0, T = 0.0, tolerance = 0.0;
  double max_rel_error = 0.0;  // measured on the verification grid

  std::size_t size() const { return rate.size(); }
  double operator()(double t) const {
    double s = 0.0;
    for (std::size_t k = 0; k < rate.size(); ++k) s += weight[k] * std::exp(-rate[k] * t);
    return s;
  }
};

/// Relative accuracy eps for omega_{1-alpha} on [delta, T]; raises E_TOLERANCE if
/// more than max_terms exponentials would be needed.
inline ExpSum exp_sum_kernel(double alpha, double delta, double T, double eps, std::size_t max_terms = 4000) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::domain, "exp_sum: alpha must lie in (0,1)");
  require(delta > 0.0 && delta < T, ErrorCode::domain, "exp_sum: need 0 < delta < T");
  require(eps > 0.0 && eps < 1.0, ErrorCode::domain, "exp_sum: tolerance must lie in (0,1)");
  const double x_lo = std::log(eps * alpha * std::tgamma(alpha) * std::pow(T, -alpha) / 4.0) / alpha;
  const double x_hi = std::log(boost::math::gamma_q_inv(alpha, eps / 4.0) / delta);
  const double pref = std::sin(std::numbers::pi * alpha) / std::numbers::pi;

  double h = std::numbers::pi * std::numbers::pi / std::log(4.0 / eps);
  for (int attempt = 0; attempt < 8; ++attempt, h *= 0.8) {
    const auto count = static_cast<std::size_t>(std::ceil((x_hi - x_lo) / h)) + 1;
    require(count <= max_terms, ErrorCode::tolerance,
            "exp_sum: tolerance needs more than the allowed number of exponentials");
    ExpSum s;
    s.delta = delta;
    s.T = T;
    s.tolerance = eps;
    for (std::size_t k = 0; k < count; ++k) {
      const double x = x_lo + h * static_cast<double>(k);
      s.rate.push_back(std::exp(x));
      s.weight.push_back(h * pref * std::exp(alpha * x));
    }
    const int grid = 2000;
    const double ratio = std::log(T / delta);
    for (int i = 0; i <= grid; ++i) {
      const double t = delta * std::exp(ratio * i / grid);
      const double exact = omega(1.0 - alpha, t);
      s.max_rel_error = std::max(s.max_rel_error, std::abs(s(t) - exact) / exact);
    }
    if (s.max_rel_error <= eps) return s;
  }
  fail(ErrorCode::tolerance, "exp_sum: tolerance not reached by step refinement");
}

}  // namespace fracuq
