#pragma once

// Classical and interlaced polynomial lattice point sets.
//
// A point coordinate is stored as an integer mantissa k with value k / b^digits,
// so every coordinate is an exact multiple of b^-digits.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fracuq/error.hpp"
#include "fracuq/field.hpp"
#include "fracuq/gf_poly.hpp"

namespace fracuq {

struct PointSet {
  unsigned base = 2;
  unsigned digits = 0;  // precision: coordinates are multiples of base^-digits
  std::size_t size = 0;
  std::size_t dim = 0;
  std::vector<std::uint64_t> mantissa;  // row-major size x dim
  std::string provenance;

  std::uint64_t raw(std::size_t i, std::size_t j) const { return mantissa[i * dim + j]; }
  double scale() const { return static_cast<double>(ipow(base, digits)); }
  double operator()(std::size_t i, std::size_t j) const { return static_cast<double>(raw(i, j)) / scale(); }

  std::vector<double> values() const {
    std::vector<double> v(mantissa.size());
    const double s = scale();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(mantissa[k]) / s;
    return v;
  }
};

/// Largest digit count whose grid b^-digits is exactly representable in a double mantissa.
inline unsigned max_exact_digits(unsigned b) {
  unsigned d = 0;
  for (std::uint64_t v = 1; v <= (std::uint64_t{1} << 53) / b; v *= b) ++d;
  return d;
}

inline void validate_lattice_inputs(unsigned b, int m, const GFPoly& P, const std::vector<GFPoly>& g) {
  require(is_prime(b), ErrorCode::validation, "lattice rule: base must be prime");
  require(m >= 1 && static_cast<unsigned>(m) <= max_exact_digits(b), ErrorCode::validation,
          "lattice rule: exponent m out of range");
  require(P.base() == b, ErrorCode::validation, "lattice rule: modulus base mismatch");
  require(P.degree() == m, ErrorCode::validation,
          "lattice rule: modulus degree " + std::to_string(P.degree()) + " != m = " + std::to_string(m));
  require(is_irreducible(P), ErrorCode::validation, "lattice rule: modulus " + P.to_string() + " is reducible");
  for (std::size_t i = 0; i < g.size(); ++i) {
    require(g[i].base() == b, ErrorCode::validation, "lattice rule: generator base mismatch");
    require(!g[i].is_zero() && g[i].degree() < m, ErrorCode::validation,
            "lattice rule: generator " + std::to_string(i + 1) + " must be nonzero with degree < m");
  }
}

/// Generator-matrix columns of one coordinate: mantissa of v_m(x^r g / P), r = 0..m-1.
inline std::vector<std::uint64_t> lattice_columns(const GFPoly& g, const GFPoly& P) {
  const unsigned b = P.base();
  const int m = P.degree();
  std::vector<std::uint64_t> cols(m);
  for (int r = 0; r < m; ++r) {
    const std::vector<int> t = laurent_digits(GFPoly::monomial(b, r) * g, P, m);
    std::uint64_t v = 0;
    for (int l = 0; l < m; ++l) v = v * b + static_cast<std::uint64_t>(t[l]);
    cols[r] = v;
  }
  return cols;
}

/// Points y_j = (v_m(j g_1 / P), ..., v_m(j g_s / P)), j = 0..b^m - 1, where j is
/// read as the polynomial of its base-b digits. The map j -> v_m(j g / P) is
/// Z_b-linear in the digits of j, so each coordinate is a digit-wise combination
/// of the columns v_m(x^r g / P).
inline PointSet classical_points(unsigned b, int m, const GFPoly& P, const std::vector<GFPoly>& g) {
  validate_lattice_inputs(b, m, P, g);
  PointSet ps;
  ps.base = b;
  ps.digits = static_cast<unsigned>(m);
  ps.size = ipow(b, static_cast<unsigned>(m));
  ps.dim = g.size();
  ps.mantissa.assign(ps.size * ps.dim, 0);
  ps.provenance = "classical polynomial lattice";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::vector<std::uint64_t> cols = lattice_columns(g[i], P);
    if (b == 2) {
      for (std::size_t j = 0; j < ps.size; ++j) {
        std::uint64_t v = 0;
        for (int r = 0; r < m; ++r)
          if ((j >> r) & 1u) v ^= cols[r];
        ps.mantissa[j * ps.dim + i] = v;
      }
      continue;
    }
    std::vector<std::vector<int>> col_digits(m, std::vector<int>(m));
    for (int r = 0; r < m; ++r)
      for (int l = m - 1, c = 0; l >= 0; --l, ++c) col_digits[r][c] = static_cast<int>((cols[r] / ipow(b, l)) % b);
    std::vector<int> acc(m);
    for (std::size_t j = 0; j < ps.size; ++j) {
      std::fill(acc.begin(), acc.end(), 0);
      std::size_t jj = j;
      for (int r = 0; r < m; ++r, jj /= b) {
        const int eta = static_cast<int>(jj % b);
        if (eta)
          for (int l = 0; l < m; ++l) acc[l] = (acc[l] + eta * col_digits[r][l]) % static_cast<int>(b);
      }
      std::uint64_t v = 0;
      for (int l = 0; l < m; ++l) v = v * b + static_cast<std::uint64_t>(acc[l]);
      ps.mantissa[j * ps.dim + i] = v;
    }
  }
  return ps;
}

/// Digit interlacing of consecutive blocks of beta coordinates: digit i of
/// coordinate l in a block lands at position l + (i-1) beta of the output.
inline PointSet interlace(const PointSet& raw, unsigned beta) {
  require(beta >= 1, ErrorCode::config, "interlace: beta must be >= 1");
  require(raw.dim % beta == 0, ErrorCode::config, "interlace: column count not divisible by beta");
  const unsigned b = raw.base, m = raw.digits, out_digits = beta * m;
  require(out_digits <= max_exact_digits(b), ErrorCode::config,
          "interlace: beta*m = " + std::to_string(out_digits) + " digits exceed double precision");
  if (beta == 1) return raw;
  PointSet out;
  out.base = b;
  out.digits = out_digits;
  out.size = raw.size;
  out.dim = raw.dim / beta;
  out.mantissa.assign(out.size * out.dim, 0);
  out.provenance = "interlaced (beta=" + std::to_string(beta) + ") " + raw.provenance;
  std::vector<std::uint64_t> place(out_digits + 1);
  for (unsigned p = 1; p <= out_digits; ++p) place[p] = ipow(b, out_digits - p);
  std::vector<std::uint64_t> in_place(m + 1);
  for (unsigned i = 1; i <= m; ++i) in_place[i] = ipow(b, m - i);
  for (std::size_t n = 0; n < raw.size; ++n)
    for (std::size_t j = 0; j < out.dim; ++j) {
      std::uint64_t v = 0;
      for (unsigned l = 1; l <= beta; ++l) {
        const std::uint64_t x = raw.raw(n, j * beta + (l - 1));
        for (unsigned i = 1; i <= m; ++i) {
          const std::uint64_t xi = (x / in_place[i]) % b;
          v += xi * place[l + (i - 1) * beta];
        }
      }
      out.mantissa[n * out.dim + j] = v;
    }
  return out;
}

/// t -> t - 1/2: points of [0,1)^z become parameters in [-1/2, 1/2)^z.
inline std::vector<ParameterVector> shift_to_centered(const PointSet& points) {
  std::vector<ParameterVector> out;
  out.reserve(points.size);
  for (std::size_t i = 0; i < points.size; ++i) {
    std::vector<double> y(points.dim);
    for (std::size_t j = 0; j < points.dim; ++j) y[j] = points(i, j) - 0.5;
    out.emplace_back(std::move(y));
  }
  return out;
}

/// Interlaced polynomial lattice rule of order beta with b^m points in z dimensions.
struct InterlacedLatticeRule {
  unsigned b = 2;
  int m = 1;
  unsigned beta = 1;
  std::size_t z = 1;
  GFPoly modulus;
  std::vector<GFPoly> gen_vector;  // beta * z entries
  std::string provenance;

  std::size_t num_points() const { return ipow(b, static_cast<unsigned>(m)); }

  void validate() const {
    require(beta >= 1 && z >= 1, ErrorCode::validation, "lattice rule: beta and z must be positive");
    require(gen_vector.size() == beta * z, ErrorCode::validation,
            "lattice rule: generating vector has " + std::to_string(gen_vector.size()) + " entries, expected beta*z = " +
                std::to_string(beta * z));
    validate_lattice_inputs(b, m, modulus, gen_vector);
    require(beta * static_cast<unsigned>(m) <= max_exact_digits(b), ErrorCode::validation,
            "lattice rule: beta*m digits exceed double precision");
  }

  /// Rule restricted to its leading z' <= z dimensions.
  InterlacedLatticeRule leading(std::size_t z_prime) const {
    require(z_prime >= 1 && z_prime <= z, ErrorCode::config, "lattice rule: cannot take more dimensions than available");
    InterlacedLatticeRule r = *this;
    r.z = z_prime;
    r.gen_vector.resize(beta * z_prime);
    return r;
  }

  PointSet points() const {
    validate();
    PointSet ps = interlace(classical_points(b, m, modulus, gen_vector), beta);
    ps.provenance += " [" + provenance + "]";
    return ps;
  }
};

/// Text format: header `b m beta z`, then the modulus coefficients (m+1
/// integers), then beta*z generator lines (degree < m), ascending degree.
/// `#` starts a comment.
inline void save_gen_vector(const InterlacedLatticeRule& rule, std::ostream& os) {
  os << "# interlaced polynomial lattice rule: b m beta z, modulus, then generators (ascending degree)\n";
  os << rule.b << ' ' << rule.m << ' ' << rule.beta << ' ' << rule.z << '\n';
  for (int i = 0; i <= rule.m; ++i) os << (i ? " " : "") << rule.modulus[i];
  os << '\n';
  for (const GFPoly& g : rule.gen_vector) {
    for (int i = 0; i < rule.m; ++i) os << (i ? " " : "") << g[i];
    os << '\n';
  }
}

inline void save_gen_vector(const InterlacedLatticeRule& rule, const std::string& path) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::io, "cannot write generating vector file " + path);
  save_gen_vector(rule, os);
}

inline InterlacedLatticeRule load_gen_vector(std::istream& is, const std::string& origin = "<stream>") {
  std::vector<std::pair<int, std::vector<long long>>> lines;
  std::string line;
  for (int lineno = 1; std::getline(is, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<long long> vals;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stoll(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail(ErrorCode::parse, origin + ":" + std::to_string(lineno) + ": not an integer: '" + tok + "'");
      }
    }
    if (!vals.empty()) lines.emplace_back(lineno, std::move(vals));
  }
  require(!lines.empty(), ErrorCode::parse, origin + ": empty generating-vector file");
  const auto& [hline, header] = lines.front();
  require(header.size() == 4, ErrorCode::parse, origin + ":" + std::to_string(hline) + ": header must be `b m beta z`");
  InterlacedLatticeRule rule;
  require(header[0] >= 2 && header[1] >= 1 && header[2] >= 1 && header[3] >= 1, ErrorCode::validation,
          origin + ":" + std::to_string(hline) + ": header values must be positive");
  rule.b = static_cast<unsigned>(header[0]);
  rule.m = static_cast<int>(header[1]);
  rule.beta = static_cast<unsigned>(header[2]);
  rule.z = static_cast<std::size_t>(header[3]);
  rule.provenance = "file " + origin;
  require(is_prime(rule.b), ErrorCode::validation, origin + ": base must be prime");
  const std::size_t expected = 2 + rule.beta * rule.z;
  require(lines.size() == expected, ErrorCode::parse,
          origin + ": expected " + std::to_string(expected - 1) + " coefficient lines after the header, found " +
              std::to_string(lines.size() - 1));
  auto to_poly = [&](const std::pair<int, std::vector<long long>>& entry) {
    const auto& [lineno, vals] = entry;
    std::vector<int> c;
    for (long long v : vals) {
      require(v >= 0 && v < static_cast<long long>(rule.b), ErrorCode::validation,
              origin + ":" + std::to_string(lineno) + ": coefficient outside {0,...,b-1}");
      c.push_back(static_cast<int>(v));
    }
    return GFPoly(rule.b, std::move(c));
  };
  rule.modulus = to_poly(lines[1]);
  require(rule.modulus.degree() == rule.m, ErrorCode::validation,
          origin + ":" + std::to_string(lines[1].first) + ": modulus must have degree m");
  require(is_irreducible(rule.modulus), ErrorCode::validation,
          origin + ":" + std::to_string(lines[1].first) + ": modulus is reducible");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    GFPoly g = to_poly(lines[i]);
    require(!g.is_zero() && g.degree() < rule.m, ErrorCode::validation,
            origin + ":" + std::to_string(lines[i].first) + ": generator must be nonzero with degree < m");
    rule.gen_vector.push_back(std::move(g));
  }
  rule.validate();
  return rule;
}

inline InterlacedLatticeRule load_gen_vector(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::io, "cannot open generating vector file " + path);
  return load_gen_vector(is, path);
}

}  // namespace fracuq
