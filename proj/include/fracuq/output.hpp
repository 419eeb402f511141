#pragma once

// CSV, gnuplot and binary writers. Numbers are printed with 17 significant
// digits so files are lossless and byte-stable.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "fracuq/error.hpp"
#include "fracuq/estimator.hpp"
#include "fracuq/lattice.hpp"
#include "fracuq/stepper.hpp"

namespace fracuq {

inline std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  require(static_cast<bool>(os), ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  return os;
}

inline void write_series_csv(const ExpectedValueSeries& s, std::ostream& os) {
  os << "n,t,mean,std,lo3sig,hi3sig\n";
  for (std::size_t n = 0; n < s.mean.size(); ++n)
    os << n << ',' << num(s.t[n]) << ',' << num(s.mean[n]) << ',' << num(s.std[n]) << ','
       << num(s.mean[n] - 3.0 * s.std[n]) << ',' << num(s.mean[n] + 3.0 * s.std[n]) << '\n';
}

inline void write_table_csv(const std::vector<ConvergenceRow>& rows, std::ostream& os) {
  os << "N,value_T,err_T,rate_T,err_L2J,rate_L2J\n";
  for (const auto& r : rows)
    os << r.N << ',' << num(r.value_T) << ',' << num(r.err_T) << ',' << num(r.rate_T) << ',' << num(r.err_L2J) << ','
       << num(r.rate_L2J) << '\n';
}

inline void write_truncation_csv(const TruncationStudy& study, std::ostream& os) {
  os << "z,err_T\n";
  for (const auto& r : study.rows) os << r.z << ',' << num(r.err_T) << '\n';
}

inline void write_refinement_csv(const std::vector<RefinementRow>& rows, std::ostream& os) {
  os << "level,n_div,N_t,h,err_L2J,err_T,ratio\n";
  for (const auto& r : rows)
    os << r.level << ',' << r.n_div << ',' << r.N_t << ',' << num(r.h) << ',' << num(r.err_L2J) << ','
       << num(r.err_T) << ',' << num(r.ratio) << '\n';
}

inline void write_trajectory_csv(const SolutionTrajectory& tr, std::ostream& os) {
  os << "n,t,value\n";
  for (std::size_t n = 0; n < tr.functional.size(); ++n)
    os << n << ',' << num(tr.t[n]) << ',' << num(tr.functional[n]) << '\n';
}

inline void write_points_csv(const PointSet& points, std::ostream& os) {
  for (std::size_t i = 0; i < points.size; ++i) {
    for (std::size_t j = 0; j < points.dim; ++j) os << (j ? "," : "") << num(points(i, j));
    os << '\n';
  }
}

/// Gnuplot script plotting the mean with its +-3 sigma band from a series CSV.
inline void write_gnuplot(const std::string& csv_name, std::ostream& os) {
  os << "set datafile separator ','\n"
        "set key top right\n"
        "set xlabel 't'\n"
        "set ylabel 'E[L(u_h(t))]'\n"
        "plot '" << csv_name << "' every ::1 using 2:5:6 with filledcurves fc rgb '#c8d8f0' title 'mean +- 3 std', \\\n"
        "     '' every ::1 using 2:3 with lines lw 2 lc rgb '#1f4e9c' title 'mean'\n";
}

/// Binary dump of the states: magic "FRQU", uint32 d_h, uint64 level count, then
/// float64 little-endian values level by level.
inline void write_states_binary(const std::vector<Vector>& states, std::ostream& os) {
  static_assert(std::endian::native == std::endian::little, "binary dump assumes a little-endian host");
  const std::uint32_t d = states.empty() ? 0u : static_cast<std::uint32_t>(states.front().size());
  const std::uint64_t levels = states.size();
  os.write("FRQU", 4);
  os.write(reinterpret_cast<const char*>(&d), sizeof d);
  os.write(reinterpret_cast<const char*>(&levels), sizeof levels);
  for (const Vector& u : states) os.write(reinterpret_cast<const char*>(u.data()), sizeof(double) * u.size());
}

inline std::vector<Vector> read_states_binary(std::istream& is) {
  char magic[4];
  std::uint32_t d = 0;
  std::uint64_t levels = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&d), sizeof d);
  is.read(reinterpret_cast<char*>(&levels), sizeof levels);
  require(is && std::memcmp(magic, "FRQU", 4) == 0, ErrorCode::parse, "state dump: bad header");
  std::vector<Vector> states(levels, Vector(d));
  for (Vector& u : states) is.read(reinterpret_cast<char*>(u.data()), sizeof(double) * d);
  require(static_cast<bool>(is), ErrorCode::parse, "state dump: truncated payload");
  return states;
}

}  // namespace fracuq
