#pragma once

#include <array>
#include <cmath>

namespace fracuq {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

using Vec2 = std::array<double, 2>;

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axis-aligned bounding description of the spatial domain.
struct Box {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  bool contains(Point2 p, double slack = 1e-12) const {
    return p.x >= x0 - slack && p.x <= x1 + slack && p.y >= y0 - slack && p.y <= y1 + slack;
  }
  double area() const { return (x1 - x0) * (y1 - y0); }
};

inline constexpr Box unit_square{};

}  // namespace fracuq
