#pragma once

// Polynomials over the prime field Z_b, coefficients stored lowest degree first.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "fracuq/error.hpp"

namespace fracuq {

class GFPoly {
 public:
  GFPoly() = default;
  GFPoly(unsigned base, std::vector<int> coeffs) : base_(base), c_(std::move(coeffs)) {
    require(base_ >= 2, ErrorCode::domain, "GFPoly: base must be >= 2");
    for (int v : c_)
      require(v >= 0 && v < static_cast<int>(base_), ErrorCode::validation,
              "GFPoly: coefficient outside {0,...,b-1}");
    trim();
  }

  /// Polynomial whose coefficients are the base-b digits of `code` (lowest first).
  static GFPoly from_code(unsigned base, std::uint64_t code) {
    std::vector<int> c;
    for (; code; code /= base) c.push_back(static_cast<int>(code % base));
    return GFPoly(base, std::move(c));
  }
  static GFPoly monomial(unsigned base, int degree, int coeff = 1) {
    std::vector<int> c(degree + 1, 0);
    c[degree] = coeff;
    return GFPoly(base, std::move(c));
  }

  unsigned base() const { return base_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 for the zero polynomial
  bool is_zero() const { return c_.empty(); }
  int operator[](int i) const { return i >= 0 && i < static_cast<int>(c_.size()) ? c_[i] : 0; }
  const std::vector<int>& coeffs() const { return c_; }

  std::uint64_t code() const {
    std::uint64_t v = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) v = v * base_ + static_cast<std::uint64_t>(*it);
    return v;
  }

  friend bool operator==(const GFPoly& a, const GFPoly& b) { return a.base_ == b.base_ && a.c_ == b.c_; }

  friend GFPoly operator+(const GFPoly& a, const GFPoly& b) {
    check_same(a, b);
    std::vector<int> c(std::max(a.c_.size(), b.c_.size()), 0);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = (a[i] + b[i]) % static_cast<int>(a.base_);
    return GFPoly(a.base_, std::move(c));
  }
  friend GFPoly operator-(const GFPoly& a, const GFPoly& b) {
    check_same(a, b);
    const int p = static_cast<int>(a.base_);
    std::vector<int> c(std::max(a.c_.size(), b.c_.size()), 0);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = ((a[i] - b[i]) % p + p) % p;
    return GFPoly(a.base_, std::move(c));
  }
  friend GFPoly operator*(const GFPoly& a, const GFPoly& b) {
    check_same(a, b);
    if (a.is_zero() || b.is_zero()) return GFPoly(a.base_, {});
    const int p = static_cast<int>(a.base_);
    std::vector<int> c(a.c_.size() + b.c_.size() - 1, 0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] = (c[i + j] + a.c_[i] * b.c_[j]) % p;
    return GFPoly(a.base_, std::move(c));
  }

  /// Quotient and remainder of a / d.
  friend std::pair<GFPoly, GFPoly> divmod(const GFPoly& a, const GFPoly& d) {
    check_same(a, d);
    require(!d.is_zero(), ErrorCode::domain, "GFPoly: division by zero polynomial");
    const int p = static_cast<int>(a.base_);
    std::vector<int> r = a.c_;
    const int dd = d.degree();
    const int inv_lead = inverse_mod(d.c_.back(), p);
    std::vector<int> q(std::max(0, a.degree() - dd + 1), 0);
    for (int i = a.degree(); i >= dd; --i) {
      const int f = r[i] * inv_lead % p;
      if (f == 0) continue;
      q[i - dd] = f;
      for (int k = 0; k <= dd; ++k) r[i - dd + k] = ((r[i - dd + k] - f * d.c_[k]) % p + p) % p;
    }
    r.resize(std::max(0, dd));
    return {GFPoly(a.base_, std::move(q)), GFPoly(a.base_, std::move(r))};
  }
  friend GFPoly operator%(const GFPoly& a, const GFPoly& d) { return divmod(a, d).second; }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < c_.size(); ++i) s += (i ? " " : "") + std::to_string(c_[i]);
    return s.empty() ? "0" : s;
  }

  static int inverse_mod(int a, int p) {
    // p is prime: a^(p-2)
    long long r = 1, x = a % p;
    for (int e = p - 2; e > 0; e >>= 1, x = x * x % p)
      if (e & 1) r = r * x % p;
    return static_cast<int>(r);
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }
  static void check_same(const GFPoly& a, const GFPoly& b) {
    require(a.base_ == b.base_, ErrorCode::domain, "GFPoly: mixed bases");
  }

  unsigned base_ = 2;
  std::vector<int> c_;
};

inline bool is_prime(unsigned n) {
  if (n < 2) return false;
  for (unsigned d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

inline GFPoly powmod(GFPoly a, std::uint64_t e, const GFPoly& mod) {
  GFPoly r(a.base(), {1});
  a = a % mod;
  for (; e; e >>= 1) {
    if (e & 1) r = r * a % mod;
    a = a * a % mod;
  }
  return r;
}

inline GFPoly gcd(GFPoly a, GFPoly b) {
  while (!b.is_zero()) {
    GFPoly r = a % b;
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

inline std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
  std::vector<std::uint64_t> f;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) {
      f.push_back(d);
      while (n % d == 0) n /= d;
    }
  if (n > 1) f.push_back(n);
  return f;
}

inline std::uint64_t ipow(std::uint64_t b, unsigned e) {
  std::uint64_t r = 1;
  while (e--) r *= b;
  return r;
}

/// Rabin's test: P of degree m is irreducible over Z_b iff x^(b^m) = x mod P
/// and gcd(x^(b^(m/r)) - x, P) = 1 for every prime r dividing m.
inline bool is_irreducible(const GFPoly& P) {
  const int m = P.degree();
  if (m < 1) return false;
  if (m == 1) return true;
  const unsigned b = P.base();
  const GFPoly x = GFPoly::monomial(b, 1);
  auto frobenius = [&](unsigned k) {  // x^(b^k) mod P by repeated b-th powers
    GFPoly r = x;
    for (unsigned i = 0; i < k; ++i) r = powmod(r, b, P);
    return r;
  };
  if (!((frobenius(m) - x) % P).is_zero()) return false;
  for (std::uint64_t r : prime_factors(static_cast<std::uint64_t>(m))) {
    const GFPoly g = gcd(P, frobenius(static_cast<unsigned>(m / r)) - x);
    if (g.degree() > 0) return false;
  }
  return true;
}

/// Smallest (by coefficient code) monic irreducible polynomial of degree m.
inline GFPoly default_modulus(unsigned b, int m) {
  require(is_prime(b), ErrorCode::domain, "default_modulus: base must be prime");
  require(m >= 1 && m <= 62, ErrorCode::domain, "default_modulus: degree out of range");
  const std::uint64_t lead = ipow(b, static_cast<unsigned>(m));
  for (std::uint64_t low = 1; low < lead; ++low) {
    GFPoly P = GFPoly::from_code(b, lead + low);
    if (is_irreducible(P)) return P;
  }
  fail(ErrorCode::domain, "default_modulus: no irreducible polynomial found");
}

/// Laurent digits t_1..t_count of num / P in Z_b((x^-1)); the polynomial part is dropped.
inline std::vector<int> laurent_digits(const GFPoly& num, const GFPoly& P, int count) {
  const int p = static_cast<int>(P.base());
  const int m = P.degree();
  const int inv_lead = GFPoly::inverse_mod(P[m], p);
  std::vector<int> rem(m + 1, 0);
  const GFPoly r0 = num % P;
  for (int i = 0; i < m; ++i) rem[i] = r0[i];
  std::vector<int> digits(count);
  for (int l = 0; l < count; ++l) {
    // rem <- rem * x, then peel off the x^m coefficient
    for (int i = m; i > 0; --i) rem[i] = rem[i - 1];
    rem[0] = 0;
    const int t = rem[m] * inv_lead % p;
    digits[l] = t;
    for (int i = 0; i <= m; ++i) rem[i] = ((rem[i] - t * P[i]) % p + p) % p;
  }
  return digits;
}

}  // namespace fracuq
