#pragma once

#include <uam/common.hpp>

#include <vector>

namespace uam::geom {

// Signed shoelace area; positive for counter-clockwise vertex order.
inline double signed_area(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

// Area-weighted centroid; falls back to the vertex mean for degenerate
// (zero-area) polygons.
inline Vec2 centroid(const std::vector<Vec2>& poly) {
  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : poly) mean += p;
  if (!poly.empty()) mean /= static_cast<double>(poly.size());
  const double A = signed_area(poly);
  if (poly.size() < 3 || std::abs(A) < 1e-300) return mean;
  // Shift to the mean first for conditioning.
  double cx = 0.0, cy = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = poly[i] - mean;
    const Vec2 q = poly[(i + 1) % n] - mean;
    const double cr = p.x() * q.y() - q.x() * p.y();
    cx += (p.x() + q.x()) * cr;
    cy += (p.y() + q.y()) * cr;
  }
  return mean + Vec2{cx, cy} / (6.0 * A);
}

inline bool is_convex(const std::vector<Vec2>& poly, double tol = 1e-12) {
  const std::size_t n = poly.size();
  if (n < 4) return true;
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[(i + 1) % n] - poly[i];
    const Vec2 b = poly[(i + 2) % n] - poly[(i + 1) % n];
    const double cr = a.x() * b.y() - a.y() * b.x();
    const double scale = a.norm() * b.norm();
    if (std::abs(cr) <= tol * scale) continue;
    const int s = cr > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

}  // namespace uam::geom
