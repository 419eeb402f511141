#pragma once

// Fast component-by-component construction of interlaced polynomial lattice
// rules with SPOD weights.
//
// Figure of merit of a classical rule with beta*s columns read in blocks of
// beta (one block per integration variable):
//
//   E = (1/N) sum_n sum_{0 != u in 1:s} gamma_u prod_{j in u} Phi_j(n),
//   Phi_j(n) = prod_{l in block j} (1 + phi(x_{n,l})) - 1,
//   gamma_u  = sum_{nu in {1:beta}^u} |nu|! prod_{j in u} 2^{[nu_j = beta]} b_j^{nu_j},
//
// with the Walsh kernel phi(x) = sum_{k >= 1} b^{-lambda mu(k)} wal_k(x), where
// mu(k) is the position of the leading base-b digit of k and lambda = max(beta, 2).
// A partially filled block uses the product over its chosen columns.
//
// For a candidate g = pi^c (pi a primitive element of Z_b[x]/P) the point
// n = pi^a maps to n g = pi^(a+c), so the candidate sweep is a cyclic
// correlation of length b^m - 1, evaluated with FFTW.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "fracuq/error.hpp"
#include "fracuq/field.hpp"
#include "fracuq/gf_poly.hpp"
#include "fracuq/lattice.hpp"

namespace fracuq {

/// Walsh kernel phi as a function of the position a0 (1-based) of the first
/// nonzero digit; a0 = 0 encodes x = 0.
class WalshKernel {
 public:
  WalshKernel(unsigned b, unsigned digits, double lambda) : values_(digits + 1) {
    const double q = std::pow(static_cast<double>(b), 1.0 - lambda);
    const double c = (b - 1.0) / b;
    values_[0] = c * q / (1.0 - q);
    double partial = 0.0;  // (b-1)/b sum_{a < a0} q^a
    for (unsigned a0 = 1; a0 <= digits; ++a0) {
      values_[a0] = partial - std::pow(q, a0) / b;
      partial += c * std::pow(q, a0);
    }
    base_ = b;
    digits_ = digits;
  }

  double operator()(std::uint64_t mantissa) const {
    if (mantissa == 0) return values_[0];
    // first nonzero digit position counted from the most significant digit
    unsigned a0 = digits_;
    for (std::uint64_t v = mantissa; v >= base_; v /= base_) --a0;
    return values_[a0];
  }

 private:
  std::vector<double> values_;
  unsigned base_ = 2;
  unsigned digits_ = 0;
};

inline double default_walsh_decay(unsigned beta) { return beta >= 2 ? static_cast<double>(beta) : 2.0; }

/// w_j(nu) = 2^{[nu = beta]} b_j^nu, nu = 1..beta (index 0 unused).
inline std::vector<double> spod_order_weights(double bj, unsigned beta) {
  std::vector<double> w(beta + 1, 0.0);
  for (unsigned nu = 1; nu <= beta; ++nu) w[nu] = (nu == beta ? 2.0 : 1.0) * std::pow(bj, nu);
  return w;
}

/// Default weight sequence b_j = sqrt(2) ||psi_j||_inf / kappa_min.
inline std::vector<double> cbc_weights_from_field(const RandomField& field, std::size_t z) {
  require(z <= field.size(), ErrorCode::config, "cbc weights: z exceeds basis length");
  const double kmin = field.declared_bounds().min;
  require(kmin > 0.0, ErrorCode::config, "cbc weights: field has no positive lower bound kappa_min");
  std::vector<double> b(z);
  for (std::size_t j = 0; j < z; ++j) b[j] = std::sqrt(2.0) * field.sup_norms()[j] / kmin;
  return b;
}

/// Figure of merit of a classical point set (columns grouped in blocks of beta,
/// the last block possibly partial), evaluated with the order recursion.
inline double figure_of_merit(const PointSet& classical, unsigned beta, const std::vector<double>& bj,
                              double lambda) {
  const std::size_t blocks = (classical.dim + beta - 1) / beta;
  require(bj.size() >= blocks, ErrorCode::config, "figure_of_merit: not enough weights");
  const WalshKernel phi(classical.base, classical.digits, lambda);
  const std::size_t N = classical.size;
  const std::size_t max_order = beta * blocks;
  std::vector<double> X((max_order + 1) * N, 0.0), next;
  for (std::size_t n = 0; n < N; ++n) X[n] = 1.0;
  std::size_t order = 0;
  for (std::size_t j = 0; j < blocks; ++j) {
    const std::vector<double> w = spod_order_weights(bj[j], beta);
    next = X;
    for (std::size_t n = 0; n < N; ++n) {
      double prod = 1.0;
      for (std::size_t l = j * beta; l < std::min<std::size_t>((j + 1) * beta, classical.dim); ++l)
        prod *= 1.0 + phi(classical.raw(n, l));
      const double Phi = prod - 1.0;
      for (std::size_t ell = 1; ell <= order + beta; ++ell) {
        double acc = 0.0, falling = 1.0;
        for (unsigned nu = 1; nu <= std::min<std::size_t>(beta, ell); ++nu) {
          falling *= static_cast<double>(ell - nu + 1);
          acc += w[nu] * falling * X[(ell - nu) * N + n];
        }
        next[ell * N + n] += Phi * acc;
      }
    }
    X.swap(next);
    order += beta;
  }
  double total = 0.0;
  for (std::size_t ell = 1; ell <= max_order; ++ell)
    for (std::size_t n = 0; n < N; ++n) total += X[ell * N + n];
  return total / static_cast<double>(N);
}

/// Arithmetic in Z_b[x]/P on elements encoded by their base-b coefficient digits.
class ExtensionField {
 public:
  explicit ExtensionField(GFPoly P) : P_(std::move(P)), b_(P_.base()), m_(P_.degree()) {
    order_ = ipow(b_, static_cast<unsigned>(m_));
    if (b_ == 2) poly_bits_ = P_.code();
  }

  std::uint64_t size() const { return order_; }

  std::uint64_t mul(std::uint64_t a, std::uint64_t c) const {
    if (b_ == 2) {
      std::uint64_t r = 0;
      for (int i = 0; c; ++i, c >>= 1)
        if (c & 1) r ^= a << i;
      for (int d = 2 * m_ - 2; d >= m_; --d)
        if ((r >> d) & 1) r ^= poly_bits_ << (d - m_);
      return r;
    }
    return (GFPoly::from_code(b_, a) * GFPoly::from_code(b_, c) % P_).code();
  }

  std::uint64_t pow(std::uint64_t a, std::uint64_t e) const {
    std::uint64_t r = 1;
    for (; e; e >>= 1, a = mul(a, a))
      if (e & 1) r = mul(r, a);
    return r;
  }

  /// Smallest-code generator of the multiplicative group.
  std::uint64_t primitive_element() const {
    const std::uint64_t L = order_ - 1;
    if (L == 1) return 1;
    const auto primes = prime_factors(L);
    for (std::uint64_t e = 2; e < order_; ++e) {
      bool gen = true;
      for (std::uint64_t q : primes)
        if (pow(e, L / q) == 1) {
          gen = false;
          break;
        }
      if (gen) return e;
    }
    fail(ErrorCode::domain, "extension field: no primitive element (modulus not irreducible?)");
  }

 private:
  GFPoly P_;
  unsigned b_;
  int m_;
  std::uint64_t order_ = 0;
  std::uint64_t poly_bits_ = 0;
};

struct CbcOptions {
  double walsh_decay = 0.0;  // lambda; 0 selects max(beta, 2)
};

struct CbcResult {
  GFPoly modulus;
  std::vector<GFPoly> gen_vector;    // beta * z entries
  std::vector<double> merit;         // figure of merit after each component
  InterlacedLatticeRule rule(unsigned b, int m, unsigned beta) const {
    InterlacedLatticeRule r;
    r.b = b;
    r.m = m;
    r.beta = beta;
    r.z = gen_vector.size() / beta;
    r.modulus = modulus;
    r.gen_vector = gen_vector;
    r.provenance = "fast CBC (SPOD weights)";
    return r;
  }
};

/// Greedy per-component minimisation of the figure of merit over all b^m - 1
/// nonzero generators of degree < m. Deterministic for fixed inputs.
inline CbcResult cbc_construct(unsigned b, int m, unsigned beta, const std::vector<double>& bj,
                               const GFPoly& modulus, CbcOptions opts = {}) {
  require(beta >= 1 && !bj.empty(), ErrorCode::config, "cbc: need beta >= 1 and at least one weight");
  validate_lattice_inputs(b, m, modulus, {});
  for (double w : bj) require(w >= 0.0 && std::isfinite(w), ErrorCode::config, "cbc: weights must be finite and >= 0");
  const double lambda = opts.walsh_decay > 0.0 ? opts.walsh_decay : default_walsh_decay(beta);
  require(lambda > 1.0, ErrorCode::config, "cbc: Walsh decay must exceed 1");

  const ExtensionField F(modulus);
  const std::size_t N = F.size();
  const std::size_t L = N - 1;
  const std::size_t z = bj.size();
  const WalshKernel phi(b, static_cast<unsigned>(m), lambda);

  // mantissa of v_m(e / P) for every element code e, and the power table of pi
  const std::vector<std::uint64_t> unit_cols = lattice_columns(GFPoly(b, {1}), modulus);
  auto v_m = [&](std::uint64_t e) {
    if (b == 2) {
      std::uint64_t v = 0;
      for (int r = 0; e; ++r, e >>= 1)
        if (e & 1) v ^= unit_cols[r];
      return v;
    }
    const std::vector<int> t = laurent_digits(GFPoly::from_code(b, e), modulus, m);
    std::uint64_t v = 0;
    for (int l = 0; l < m; ++l) v = v * b + static_cast<std::uint64_t>(t[l]);
    return v;
  };
  const std::uint64_t pi = F.primitive_element();
  std::vector<std::uint64_t> power(L), log_of(N, 0);
  std::vector<double> phi_pow(L);
  for (std::uint64_t a = 0, e = 1; a < L; ++a, e = F.mul(e, pi)) {
    power[a] = e;
    log_of[e] = a;
    phi_pow[a] = phi(v_m(e));
  }

  // FFT of phi over the cyclic group, reused by every component
  std::vector<std::complex<double>> phi_hat(L), a_hat(L), corr(L);
  auto fft = [L](std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out, int sign) {
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(L), reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  };
  {
    std::vector<std::complex<double>> tmp(phi_pow.begin(), phi_pow.end());
    fft(tmp, phi_hat, FFTW_FORWARD);
  }

  CbcResult result;
  result.modulus = modulus;
  const std::size_t max_order = beta * z;
  std::vector<double> X((max_order + 1) * N, 0.0);  // X[ell][n] = ell! U(ell, n)
  for (std::size_t n = 0; n < N; ++n) X[n] = 1.0;
  std::vector<double> block_prod(N), Y(N), A(N), current(N);  // current: column values phi(x_n)
  std::size_t order = 0;

  for (std::size_t j = 0; j < z; ++j) {
    const std::vector<double> w = spod_order_weights(bj[j], beta);
    // Y(n) = sum_ell' X(ell', n) sum_nu w(nu) (ell'+nu)!/ell'!
    std::vector<double> coef(order + 1);
    for (std::size_t lp = 0; lp <= order; ++lp) {
      double c = 0.0, rising = 1.0;
      for (unsigned nu = 1; nu <= beta; ++nu) {
        rising *= static_cast<double>(lp + nu);
        c += w[nu] * rising;
      }
      coef[lp] = c;
    }
    double sum_x = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      double y = 0.0;
      for (std::size_t lp = 0; lp <= order; ++lp) y += coef[lp] * X[lp * N + n];
      Y[n] = y;
      for (std::size_t ell = 1; ell <= order; ++ell) sum_x += X[ell * N + n];
    }
    std::fill(block_prod.begin(), block_prod.end(), 1.0);

    for (unsigned l = 0; l < beta; ++l) {
      double base_merit = sum_x;
      for (std::size_t n = 0; n < N; ++n) {
        A[n] = block_prod[n] * Y[n];
        base_merit += (block_prod[n] - 1.0) * Y[n];
      }
      // merit(c) = (base + A(0) phi(0) + sum_a A(pi^a) phi_{a+c}) / N
      std::vector<std::complex<double>> a_seq(L);
      for (std::size_t a = 0; a < L; ++a) a_seq[a] = A[power[a]];
      fft(a_seq, a_hat, FFTW_FORWARD);
      std::vector<std::complex<double>> prod(L);
      for (std::size_t k = 0; k < L; ++k) prod[k] = std::conj(a_hat[k]) * phi_hat[k];
      fft(prod, corr, FFTW_BACKWARD);
      std::size_t best = 0;
      double best_val = INFINITY;
      for (std::size_t c = 0; c < L; ++c) {
        const double v = corr[c].real() / static_cast<double>(L);
        if (v < best_val) {
          best_val = v;
          best = c;
        }
      }
      const std::uint64_t g = power[best];
      result.gen_vector.push_back(GFPoly::from_code(b, g));
      result.merit.push_back((base_merit + A[0] * phi(0) + best_val) / static_cast<double>(N));
      // column values of the chosen generator: x_n = v_m(n g / P)
      block_prod[0] *= 1.0 + phi(0);
      for (std::size_t n = 1; n < N; ++n) block_prod[n] *= 1.0 + phi_pow[(log_of[n] + best) % L];
    }

    // fold the completed block into the order recursion
    for (std::size_t n = 0; n < N; ++n) {
      const double Phi = block_prod[n] - 1.0;
      for (std::size_t ell = order + beta; ell >= 1; --ell) {
        double acc = 0.0, falling = 1.0;
        for (unsigned nu = 1; nu <= std::min<std::size_t>(beta, ell); ++nu) {
          falling *= static_cast<double>(ell - nu + 1);
          acc += w[nu] * falling * X[(ell - nu) * N + n];
        }
        X[ell * N + n] += Phi * acc;
      }
    }
    order += beta;
  }
  return result;
}

inline CbcResult cbc_construct(unsigned b, int m, unsigned beta, const std::vector<double>& bj,
                               CbcOptions opts = {}) {
  return cbc_construct(b, m, beta, bj, default_modulus(b, m), opts);
}

}  // namespace fracuq
