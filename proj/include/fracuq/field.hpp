#pragma once

// Parametric diffusivity kappa(x, y) = kappa0(x) + sum_j y_j psi_j(x) with
// y_j uniform on [-1/2, 1/2], its truncation to the leading z terms, and the
// sine-product example field on the unit square.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fracuq/error.hpp"
#include "fracuq/geometry.hpp"

namespace fracuq {

using ScalarField = std::function<double(Point2)>;

/// Riemann zeta for s > 1: reversed partial sum plus an Euler-Maclaurin tail.
inline double zeta(double s, int terms = 1000) {
  require(s > 1.0, ErrorCode::domain, "zeta: s must exceed 1");
  double sum = 0.0;
  for (int n = terms; n >= 1; --n) sum += std::pow(static_cast<double>(n), -s);
  const double N = terms;
  // tail  sum_{n > N} n^{-s}
  const double tail = std::pow(N, 1.0 - s) / (s - 1.0) - 0.5 * std::pow(N, -s) +
                      s / 12.0 * std::pow(N, -s - 1.0) -
                      s * (s + 1.0) * (s + 2.0) / 720.0 * std::pow(N, -s - 3.0);
  return sum + tail;
}

/// Normalising constant M = zeta(3) - zeta(4) of the example field.
inline double example_field_normaliser() { return zeta(3.0) - zeta(4.0); }

/// Coordinates of a point in the truncated parameter domain [-1/2, 1/2]^z.
class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(std::vector<double> coords) : coords_(std::move(coords)) {
    for (std::size_t j = 0; j < coords_.size(); ++j) {
      const double c = coords_[j];
      require(std::isfinite(c) && c >= -0.5 && c <= 0.5, ErrorCode::domain,
              "parameter coordinate " + std::to_string(j) + " outside [-1/2, 1/2]");
    }
  }
  static ParameterVector zero(std::size_t z) { return ParameterVector(std::vector<double>(z, 0.0)); }

  std::size_t active_dim() const { return coords_.size(); }
  double operator[](std::size_t j) const { return j < coords_.size() ? coords_[j] : 0.0; }
  std::span<const double> coords() const { return coords_; }

 private:
  std::vector<double> coords_;
};

struct KappaBounds {
  double min = 0.0;
  double max = 0.0;
};

class RandomField {
 public:
  RandomField(ScalarField kappa0, std::vector<ScalarField> basis, std::vector<double> sup_norms,
              KappaBounds declared, double summability_p, Box domain = unit_square, bool sorted = false)
      : kappa0_(std::move(kappa0)),
        basis_(std::move(basis)),
        sup_norms_(std::move(sup_norms)),
        declared_(declared),
        summability_p_(summability_p),
        domain_(domain),
        sorted_(sorted) {
    require(basis_.size() == sup_norms_.size(), ErrorCode::config,
            "random field: basis and sup-norm lists differ in length");
    for (double s : sup_norms_)
      require(s >= 0.0 && std::isfinite(s), ErrorCode::config, "random field: sup-norms must be finite and >= 0");
    if (sorted_)
      require(std::is_sorted(sup_norms_.rbegin(), sup_norms_.rend()), ErrorCode::config,
              "random field flagged sorted but sup-norms increase");
  }

  std::size_t size() const { return basis_.size(); }
  const Box& domain() const { return domain_; }
  bool sorted() const { return sorted_; }
  double summability_p() const { return summability_p_; }
  KappaBounds declared_bounds() const { return declared_; }
  std::span<const double> sup_norms() const { return sup_norms_; }
  const ScalarField& mean() const { return kappa0_; }
  const ScalarField& basis(std::size_t j) const { return basis_.at(j); }

  double kappa0(Point2 x) const { return kappa0_(x); }

  /// kappa0(x) + sum_{j < z} y_j psi_j(x), z = y.active_dim().
  double kappa(Point2 x, std::span<const double> y) const {
    require(domain_.contains(x), ErrorCode::domain, "evaluate_kappa: point outside the domain");
    require(y.size() <= basis_.size(), ErrorCode::config, "evaluate_kappa: truncation exceeds basis length");
    double value = kappa0_(x);
    for (std::size_t j = 0; j < y.size(); ++j)
      if (y[j] != 0.0) value += y[j] * basis_[j](x);
    return value;
  }
  double kappa(Point2 x, const ParameterVector& y) const { return kappa(x, y.coords()); }

  /// (1/2) sum_{j >= z} ||psi_j||_inf, the uniform bound on |kappa - kappa_z|.
  double tail_bound(std::size_t z) const {
    require(z <= basis_.size(), ErrorCode::config, "tail_bound: z exceeds basis length");
    double tail = 0.0;
    for (std::size_t j = sup_norms_.size(); j > z; --j) tail += sup_norms_[j - 1];
    return 0.5 * tail;
  }

  /// Same field with basis reordered by nonincreasing sup-norm (stable).
  RandomField sorted_by_norm() const {
    std::vector<std::size_t> order(basis_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sup_norms_[a] > sup_norms_[b]; });
    std::vector<ScalarField> basis;
    std::vector<double> norms;
    for (std::size_t j : order) {
      basis.push_back(basis_[j]);
      norms.push_back(sup_norms_[j]);
    }
    return RandomField(kappa0_, std::move(basis), std::move(norms), declared_, summability_p_, domain_, true);
  }

 private:
  ScalarField kappa0_;
  std::vector<ScalarField> basis_;
  std::vector<double> sup_norms_;
  KappaBounds declared_;
  double summability_p_;
  Box domain_;
  bool sorted_;
};

inline double evaluate_kappa(const RandomField& field, Point2 x, const ParameterVector& y) {
  return field.kappa(x, y);
}

inline double tail_bound(const RandomField& field, std::size_t z) { return field.tail_bound(z); }

/// Max |f| over a (res+1)^2 tensor grid of the box.
inline double grid_sup_norm(const ScalarField& f, const Box& box, int res = 256) {
  double best = 0.0;
  for (int i = 0; i <= res; ++i)
    for (int j = 0; j <= res; ++j) {
      const Point2 p{box.x0 + (box.x1 - box.x0) * i / res, box.y0 + (box.y1 - box.y0) * j / res};
      best = std::max(best, std::abs(f(p)));
    }
  return best;
}

/// Field from closed-form callables. Sup-norms come from grid maximisation and
/// the declared bounds from the grid range of kappa0 -/+ half the norm sum.
inline RandomField make_field(ScalarField kappa0, std::vector<ScalarField> basis, double summability_p,
                              const Box& domain = unit_square, int res = 256) {
  std::vector<double> norms;
  norms.reserve(basis.size());
  for (const auto& psi : basis) norms.push_back(grid_sup_norm(psi, domain, res));
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i <= res; ++i)
    for (int j = 0; j <= res; ++j) {
      const double v = kappa0({domain.x0 + (domain.x1 - domain.x0) * i / res,
                               domain.y0 + (domain.y1 - domain.y0) * j / res});
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double half = 0.5 * std::accumulate(norms.begin(), norms.end(), 0.0);
  return RandomField(std::move(kappa0), std::move(basis), std::move(norms), {lo - half, hi + half},
                     summability_p, domain);
}

/// One term a * sin(k pi x1) sin(l pi x2) of a sine-table field.
struct SineTerm {
  int k = 1;
  int l = 1;
  double amplitude = 0.0;
};

/// kappa0 = c0 + c1 x1 + c2 x2 + c3 x1 x2 on the unit square with a sine-product basis.
/// Sup-norms are exact: the sine product attains 1 for positive integer k, l.
inline RandomField make_sine_table_field(std::array<double, 4> kappa0, std::vector<SineTerm> terms,
                                         double summability_p = 0.55) {
  std::vector<ScalarField> basis;
  std::vector<double> norms;
  for (const SineTerm& t : terms) {
    require(t.k >= 1 && t.l >= 1, ErrorCode::config, "sine-table: k and l must be positive integers");
    const double kp = t.k * std::numbers::pi, lp = t.l * std::numbers::pi, a = t.amplitude;
    basis.emplace_back([=](Point2 p) { return a * std::sin(kp * p.x) * std::sin(lp * p.y); });
    norms.push_back(std::abs(a));
  }
  const auto [c0, c1, c2, c3] = kappa0;
  ScalarField mean = [=](Point2 p) { return c0 + c1 * p.x + c2 * p.y + c3 * p.x * p.y; };
  // bilinear: extremes at the corners
  const double corners[] = {c0, c0 + c1, c0 + c2, c0 + c1 + c2 + c3};
  const double half = 0.5 * std::accumulate(norms.begin(), norms.end(), 0.0);
  return RandomField(std::move(mean), std::move(basis), std::move(norms),
                     {*std::min_element(std::begin(corners), std::end(corners)) - half,
                      *std::max_element(std::begin(corners), std::end(corners)) + half},
                     summability_p);
}

/// (k, l) index pairs of the example field: l = 1..q outer, k = 1..q+1-l inner.
inline std::vector<std::pair<int, int>> example_field_indices(int q) {
  std::vector<std::pair<int, int>> idx;
  for (int l = 1; l <= q; ++l)
    for (int k = 1; k <= q + 1 - l; ++k) idx.emplace_back(k, l);
  return idx;
}

/// Sine-product example field on (0,1)^2 with q(q+1)/2 terms:
///   kappa0 = (2 + x1 x2)/10,  psi_{k,l} = sin(k pi x1) sin(l pi x2) / (divisor M (k+l)^4).
/// divisor = 1 is the bare normalisation, for which kappa is not bounded away
/// from zero; divisor = 10 keeps kappa in [0.15, 0.35].
inline RandomField build_example_field(int q, double psi_divisor = 10.0, bool sort_by_norm = false) {
  require(q >= 1, ErrorCode::config, "example field: q must be >= 1");
  require(psi_divisor > 0.0, ErrorCode::config, "example field: psi_divisor must be positive");
  const double M = example_field_normaliser();
  std::vector<SineTerm> terms;
  for (auto [k, l] : example_field_indices(q))
    terms.push_back({k, l, 1.0 / (psi_divisor * M * std::pow(static_cast<double>(k + l), 4))});
  RandomField field = make_sine_table_field({0.2, 0.0, 0.0, 0.1}, std::move(terms), 0.55);
  return sort_by_norm ? field.sorted_by_norm() : field;
}

struct BoundsViolation {
  Point2 x;
  std::vector<double> y;
  double kappa = 0.0;
};

struct BoundsReport {
  double observed_min = INFINITY;
  double observed_max = -INFINITY;
  std::vector<BoundsViolation> violations;

  bool ok() const { return violations.empty(); }
};

/// Evaluates kappa on a grid of x crossed with the two sign-worst-case
/// parameters at each x and `sample_count` uniform random parameters.
/// A violation is kappa <= 0 or kappa outside the declared bounds.
inline BoundsReport verify_bounds(const RandomField& field, int grid_resolution, int sample_count,
                                  std::uint64_t rng_seed, std::size_t max_reported = 16) {
  require(grid_resolution >= 2, ErrorCode::config, "verify_bounds: grid_resolution must be >= 2");
  require(sample_count >= 1, ErrorCode::config, "verify_bounds: sample_count must be >= 1");
  const std::size_t z = field.size();
  const KappaBounds decl = field.declared_bounds();
  const Box& box = field.domain();

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  std::vector<std::vector<double>> samples(sample_count, std::vector<double>(z));
  for (auto& y : samples)
    for (double& c : y) c = unif(rng);

  BoundsReport report;
  std::vector<double> psi(z);
  auto record = [&](Point2 x, double value, auto make_y) {
    report.observed_min = std::min(report.observed_min, value);
    report.observed_max = std::max(report.observed_max, value);
    const double slack = 1e-12 * std::max(std::abs(decl.min), std::abs(decl.max)) + 1e-14;
    const bool bad = value <= 0.0 || value < decl.min - slack || value > decl.max + slack;
    if (bad && report.violations.size() < max_reported) report.violations.push_back({x, make_y(), value});
  };
  for (int i = 0; i < grid_resolution; ++i)
    for (int k = 0; k < grid_resolution; ++k) {
      const Point2 x{box.x0 + (box.x1 - box.x0) * i / (grid_resolution - 1),
                     box.y0 + (box.y1 - box.y0) * k / (grid_resolution - 1)};
      const double k0 = field.kappa0(x);
      double spread = 0.0;
      for (std::size_t j = 0; j < z; ++j) {
        psi[j] = field.basis(j)(x);
        spread += 0.5 * std::abs(psi[j]);
      }
      auto worst = [&](double sign) {
        std::vector<double> y(z);
        for (std::size_t j = 0; j < z; ++j) y[j] = psi[j] >= 0 ? 0.5 * sign : -0.5 * sign;
        return y;
      };
      record(x, k0 - spread, [&] { return worst(-1.0); });
      record(x, k0 + spread, [&] { return worst(1.0); });
      for (const auto& y : samples) {
        double v = k0;
        for (std::size_t j = 0; j < z; ++j) v += y[j] * psi[j];
        record(x, v, [&] { return y; });
      }
    }
  return report;
}

}  // namespace fracuq
