#pragma once

// Conforming P1 triangulations with homogeneous Dirichlet boundary.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fracuq/error.hpp"
#include "fracuq/geometry.hpp"

namespace fracuq {

class TriMesh {
 public:
  TriMesh() = default;

  /// Triangles are reoriented counterclockwise; degenerate triangles are rejected.
  TriMesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles, std::vector<bool> boundary)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_(std::move(boundary)) {
    require(boundary_.size() == vertices_.size(), ErrorCode::validation, "mesh: boundary flag count mismatch");
    const int nv = static_cast<int>(vertices_.size());
    for (auto& t : triangles_) {
      for (int v : t) require(v >= 0 && v < nv, ErrorCode::validation, "mesh: triangle vertex index out of range");
      double a = signed_area(t);
      if (a < 0.0) {
        std::swap(t[1], t[2]);
        a = -a;
      }
      require(a > 1e-14 * (1.0 + diameter(t) * diameter(t)), ErrorCode::validation, "mesh: degenerate triangle");
      h_ = std::max(h_, diameter(t));
    }
    interior_index_.assign(vertices_.size(), -1);
    for (int v = 0; v < nv; ++v)
      if (!boundary_[v]) interior_index_[v] = num_dofs_++;
  }

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<bool>& boundary() const { return boundary_; }
  /// Interior dof id of a vertex, -1 on the boundary.
  const std::vector<int>& interior_index() const { return interior_index_; }
  int num_dofs() const { return num_dofs_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  double h() const { return h_; }

  double area(std::size_t k) const { return signed_area(triangles_[k]); }

  /// Gradients of the three barycentric basis functions on triangle k.
  std::array<Vec2, 3> gradients(std::size_t k) const {
    const auto& t = triangles_[k];
    const Point2 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
    const double two_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    return {Vec2{(b.y - c.y) / two_area, (c.x - b.x) / two_area},
            Vec2{(c.y - a.y) / two_area, (a.x - c.x) / two_area},
            Vec2{(a.y - b.y) / two_area, (b.x - a.x) / two_area}};
  }

  Point2 barycentric_point(std::size_t k, double l0, double l1, double l2) const {
    const auto& t = triangles_[k];
    const Point2 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
    return {l0 * a.x + l1 * b.x + l2 * c.x, l0 * a.y + l1 * b.y + l2 * c.y};
  }

  /// Interior dof coefficients of the vertex interpolant of f.
  template <class F>
  std::vector<double> interpolate(F&& f) const {
    std::vector<double> u(num_dofs_);
    for (std::size_t v = 0; v < vertices_.size(); ++v)
      if (interior_index_[v] >= 0) u[interior_index_[v]] = f(vertices_[v]);
    return u;
  }

 private:
  double signed_area(const std::array<int, 3>& t) const {
    const Point2 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  }
  double diameter(const std::array<int, 3>& t) const {
    const Point2 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
    return std::max({distance(a, b), distance(b, c), distance(c, a)});
  }

  std::vector<Point2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<bool> boundary_;
  std::vector<int> interior_index_;
  int num_dofs_ = 0;
  double h_ = 0.0;
};

/// Structured mesh of the unit square: each cell split along its (0,0)-(1,1) diagonal.
inline TriMesh triangulate_unit_square(int n_div) {
  require(n_div >= 1, ErrorCode::config, "triangulate_unit_square: n_div must be >= 1");
  const int n1 = n_div + 1;
  std::vector<Point2> v;
  std::vector<bool> bnd;
  v.reserve(n1 * n1);
  for (int j = 0; j < n1; ++j)
    for (int i = 0; i < n1; ++i) {
      v.push_back({static_cast<double>(i) / n_div, static_cast<double>(j) / n_div});
      bnd.push_back(i == 0 || j == 0 || i == n_div || j == n_div);
    }
  std::vector<std::array<int, 3>> tri;
  tri.reserve(2 * n_div * n_div);
  for (int j = 0; j < n_div; ++j)
    for (int i = 0; i < n_div; ++i) {
      const int a = j * n1 + i, b = a + 1, c = a + n1, d = c + 1;
      tri.push_back({a, b, d});
      tri.push_back({a, d, c});
    }
  return TriMesh(std::move(v), std::move(tri), std::move(bnd));
}

// Text format: vertex count, "x y boundary_flag" lines, triangle count, "i j k" lines.

inline void write_mesh(const TriMesh& mesh, std::ostream& os) {
  os.precision(17);
  os << mesh.num_vertices() << '\n';
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    os << mesh.vertices()[v].x << ' ' << mesh.vertices()[v].y << ' ' << (mesh.boundary()[v] ? 1 : 0) << '\n';
  os << mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline TriMesh read_mesh(std::istream& is) {
  auto next = [&](auto& value, const char* what) {
    if (!(is >> value)) fail(ErrorCode::parse, std::string("mesh: could not read ") + what);
  };
  long long nv = 0, nt = 0;
  next(nv, "vertex count");
  require(nv >= 3, ErrorCode::parse, "mesh: need at least 3 vertices");
  std::vector<Point2> v(nv);
  std::vector<bool> bnd(nv);
  for (auto i = 0LL; i < nv; ++i) {
    int flag = 0;
    next(v[i].x, "vertex x");
    next(v[i].y, "vertex y");
    next(flag, "boundary flag");
    require(flag == 0 || flag == 1, ErrorCode::parse, "mesh: boundary flag must be 0 or 1");
    bnd[i] = flag == 1;
  }
  next(nt, "triangle count");
  require(nt >= 1, ErrorCode::parse, "mesh: need at least one triangle");
  std::vector<std::array<int, 3>> tri(nt);
  for (auto& t : tri)
    for (int& k : t) next(k, "triangle index");
  return TriMesh(std::move(v), std::move(tri), std::move(bnd));
}

inline void write_mesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::io, "mesh: cannot open '" + path + "' for writing");
  write_mesh(mesh, os);
}

inline TriMesh read_mesh(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::io, "mesh: cannot open '" + path + "'");
  return read_mesh(is);
}

}  // namespace fracuq
