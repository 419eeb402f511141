#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fracuq/error.hpp"

namespace fracuq {

/// Riemann-Liouville kernel omega_mu(t) = t^(mu-1) / Gamma(mu), t > 0.
inline double omega(double mu, double t) { return std::pow(t, mu - 1.0) / std::tgamma(mu); }

/// Levels t_n = T (n / N_t)^gamma, n = 0..N_t.
class GradedTimeMesh {
 public:
  GradedTimeMesh(double T, int steps, double gamma) : T_(T), gamma_(gamma) {
    require(T > 0.0 && std::isfinite(T), ErrorCode::config, "time mesh: T must be positive");
    require(steps >= 1, ErrorCode::config, "time mesh: N_t must be >= 1");
    require(gamma >= 1.0 && std::isfinite(gamma), ErrorCode::config, "time mesh: gamma must be >= 1");
    t_.resize(steps + 1);
    for (int n = 0; n <= steps; ++n)
      t_[n] = gamma == 1.0 ? T * n / steps : T * std::pow(static_cast<double>(n) / steps, gamma);
    t_[steps] = T;
    tau_.resize(steps + 1, 0.0);
    for (int n = 1; n <= steps; ++n) tau_[n] = t_[n] - t_[n - 1];
  }

  double T() const { return T_; }
  int steps() const { return static_cast<int>(t_.size()) - 1; }
  double gamma() const { return gamma_; }
  bool uniform() const { return gamma_ == 1.0; }
  /// tau = T^(1/gamma) / N_t, so that t_n = (n tau)^gamma.
  double base_step() const { return std::pow(T_, 1.0 / gamma_) / steps(); }
  double t(int n) const { return t_[n]; }
  /// tau_n = t_n - t_(n-1), n >= 1.
  double tau(int n) const { return tau_[n]; }
  const std::vector<double>& levels() const { return t_; }
  double min_step() const { return tau_[1]; }
  double max_step() const {
    double m = 0.0;
    for (int n = 1; n <= steps(); ++n) m = std::max(m, tau_[n]);
    return m;
  }

 private:
  double T_;
  double gamma_;
  std::vector<double> t_;
  std::vector<double> tau_;
};

inline GradedTimeMesh graded_mesh(double T, int steps, double gamma) { return GradedTimeMesh(T, steps, gamma); }

}  // namespace fracuq
