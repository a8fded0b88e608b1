#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace scenegen {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Axis-aligned box in world coordinates (meters).
struct Aabb3 {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 extent() const { return hi - lo; }
  double volume() const {
    const Vec3 e = extent();
    return std::max(e.x(), 0.0) * std::max(e.y(), 0.0) * std::max(e.z(), 0.0);
  }
  bool contains(const Aabb3& o, double tol = 0.0) const {
    return (lo.array() <= o.lo.array() + tol).all() && (o.hi.array() <= hi.array() + tol).all();
  }
};

/// Axis-aligned rectangle on the ground plane.
struct Rect2 {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();

  double width() const { return hi.x() - lo.x(); }
  double depth() const { return hi.y() - lo.y(); }
  double area() const { return std::max(width(), 0.0) * std::max(depth(), 0.0); }
  bool contains(const Vec2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
};

inline double intersection_volume(const Aabb3& a, const Aabb3& b) {
  double v = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double o = std::min(a.hi[k], b.hi[k]) - std::max(a.lo[k], b.lo[k]);
    if (o <= 0.0) return 0.0;
    v *= o;
  }
  return v;
}

inline double intersection_area(const Rect2& a, const Rect2& b) {
  const double w = std::min(a.hi.x(), b.hi.x()) - std::max(a.lo.x(), b.lo.x());
  const double d = std::min(a.hi.y(), b.hi.y()) - std::max(a.lo.y(), b.lo.y());
  return (w > 0.0 && d > 0.0) ? w * d : 0.0;
}

inline double iou3d(const Aabb3& a, const Aabb3& b) {
  const double inter = intersection_volume(a, b);
  if (inter <= 0.0) return 0.0;
  return inter / (a.volume() + b.volume() - inter);
}

/// Partial derivatives of IoU w.r.t. both boxes' bounds.
struct IouGrad {
  double value = 0.0;
  Vec3 d_a_lo = Vec3::Zero();
  Vec3 d_a_hi = Vec3::Zero();
  Vec3 d_b_lo = Vec3::Zero();
  Vec3 d_b_hi = Vec3::Zero();
};

// Separated or touching pairs get the zero subgradient. Ties between faces
// (measure zero) attribute the moving face to box b.
inline IouGrad iou3d_with_grad(const Aabb3& a, const Aabb3& b) {
  IouGrad g;
  std::array<double, 3> overlap{};
  for (int k = 0; k < 3; ++k) {
    overlap[k] = std::min(a.hi[k], b.hi[k]) - std::max(a.lo[k], b.lo[k]);
    if (overlap[k] <= 0.0) return g;
  }
  const double inter = overlap[0] * overlap[1] * overlap[2];
  const Vec3 ea = a.extent();
  const Vec3 eb = b.extent();
  const double va = ea.prod();
  const double vb = eb.prod();
  const double uni = va + vb - inter;
  g.value = inter / uni;

  // dIoU = (dI * U - I * dU) / U^2 with dU = dVa + dVb - dI
  //      = dI * (U + I) / U^2 - I * (dVa + dVb) / U^2
  const double c_inter = (uni + inter) / (uni * uni);
  const double c_vol = inter / (uni * uni);
  for (int k = 0; k < 3; ++k) {
    const double di = inter / overlap[k];
    const bool a_hi_binds = a.hi[k] < b.hi[k];
    const bool a_lo_binds = a.lo[k] > b.lo[k];
    const double dva = va / ea[k];
    const double dvb = vb / eb[k];
    // d overlap / d hi of the binding box = +1, d overlap / d lo of the binding box = -1
    g.d_a_hi[k] = (a_hi_binds ? di : 0.0) * c_inter - dva * c_vol;
    g.d_b_hi[k] = (a_hi_binds ? 0.0 : di) * c_inter - dvb * c_vol;
    g.d_a_lo[k] = -(a_lo_binds ? di : 0.0) * c_inter + dva * c_vol;
    g.d_b_lo[k] = -(a_lo_binds ? 0.0 : di) * c_inter + dvb * c_vol;
  }
  return g;
}

/// Signed shoelace area; positive for counter-clockwise polygons.
inline double signed_polygon_area(std::span<const Vec2> poly) {
  double acc = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    acc += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * acc;
}

inline double polygon_area(std::span<const Vec2> poly) { return std::abs(signed_polygon_area(poly)); }

// Even-odd ray casting. Points exactly on an edge may land on either side.
inline bool point_in_polygon(std::span<const Vec2> poly, const Vec2& p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

inline bool segments_properly_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  const double d1 = cross(q1, q2, p1);
  const double d2 = cross(q1, q2, p2);
  const double d3 = cross(p1, p2, q1);
  const double d4 = cross(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

/// True when no two non-adjacent edges cross. O(n^2); polygons here are small.
inline bool polygon_is_simple(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_properly_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

inline Rect2 polygon_bounds(std::span<const Vec2> poly) {
  Rect2 r{Vec2::Constant(1e300), Vec2::Constant(-1e300)};
  for (const auto& p : poly) {
    r.lo = r.lo.cwiseMin(p);
    r.hi = r.hi.cwiseMax(p);
  }
  return r;
}

}  // namespace scenegen
