#pragma once

#include <cmath>

namespace toolpose {

// Pixel coordinates: x is the column, y the row; pixel centres sit on integers.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Squared distance from p to the closed segment [a, b].
inline double squared_distance_to_segment(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  }
  const double ex = p.x - (a.x + t * dx);
  const double ey = p.y - (a.y + t * dy);
  return ex * ex + ey * ey;
}

inline double distance_to_segment(const Point& p, const Point& a, const Point& b) {
  return std::sqrt(squared_distance_to_segment(p, a, b));
}

}  // namespace toolpose
