#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <limits>
#include <optional>

namespace planar {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

// Tolerances for meter-scale scenes in double precision.
inline constexpr double kEpsRay = 1e-9;    // parametric, along a unit direction
inline constexpr double kEpsPlane = 1e-6;  // m
inline constexpr double kEpsArea = 1e-10;  // m^2

/// A single range measurement: sensor origin, unit direction, endpoint and range.
struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3::UnitZ();
  Vec3 endpoint = Vec3::UnitZ();
  double range = 1.0;

  Vec3 at(double t) const { return origin + t * dir; }
};

/// Builds a ray from a sensor origin and a measured point. Throws ZeroLengthRay
/// when the two coincide to within 1e-9 m.
Ray ray_from_measurement(const Vec3& origin, const Vec3& endpoint);

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  static Aabb empty() { return {}; }
  static Aabb of_point(const Vec3& p) { return {p, p}; }

  bool is_empty() const { return (min.array() > max.array()).any(); }

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }

  Aabb inflated(double margin) const {
    return {min.array() - margin, max.array() + margin};
  }

  bool contains(const Aabb& b) const {
    return (min.array() <= b.min.array()).all() && (max.array() >= b.max.array()).all();
  }
  bool contains(const Vec3& p) const {
    return (min.array() <= p.array()).all() && (max.array() >= p.array()).all();
  }
  bool overlaps(const Aabb& b) const {
    return (min.array() <= b.max.array()).all() && (b.min.array() <= max.array()).all();
  }

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
};

Aabb aabb_union(const Aabb& a, const Aabb& b);
/// Surface area of the box; the cost metric for BVH insertion. Empty boxes have area 0.
double aabb_surface_area(const Aabb& b);
Aabb aabb_of_sphere(const Vec3& center, double radius);

/// Slab test of the segment origin + t*dir, t in [0, tmax], against the box.
/// inv_dir is the componentwise reciprocal of dir (infinities allowed).
bool ray_aabb_intersect(const Vec3& origin, const Vec3& inv_dir, double tmax, const Aabb& box);
bool ray_aabb_intersect(const Ray& ray, double tmax, const Aabb& box);

struct Triangle {
  Vec3 a, b, c;

  Vec3 normal_unnormalized() const { return (b - a).cross(c - a); }
  double area() const { return 0.5 * normal_unnormalized().norm(); }
  Vec3 centroid() const { return (a + b + c) / 3.0; }
  Aabb bounds() const {
    Aabb box = Aabb::of_point(a);
    box.expand(b);
    box.expand(c);
    return box;
  }
};

/// Distance t along the ray at which it crosses the triangle, restricted to
/// t in (kEpsRay, range + slack]. Edges count as hits. Degenerate triangles
/// (area <= kEpsArea) never intersect.
std::optional<double> ray_triangle_intersect(const Ray& ray, const Triangle& tri, double slack = 0.0);
std::optional<double> ray_triangle_intersect(const Vec3& origin, const Vec3& dir, double tmax,
                                             const Triangle& tri);

double orient_2d(const Vec2& a, const Vec2& b, const Vec2& c);

/// Proper interior crossing of two segments. Touching at an endpoint, or
/// collinear overlap, is not a crossing.
bool segment_intersect_2d(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1);

/// Closed containment: inside or within kEpsPlane of the boundary. Works for
/// either winding; degenerate triangles contain nothing.
bool point_in_triangle_2d(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c,
                          double eps = kEpsPlane);

/// Distance from p to the segment [a, b].
double point_segment_distance_2d(const Vec2& p, const Vec2& a, const Vec2& b);

/// Orthonormal right-handed frame {u, v, normal} anchored at origin; used to
/// parameterize a plane in 2D.
struct PlaneFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();

  static PlaneFrame from_normal(const Vec3& origin, const Vec3& normal);

  /// New frame for a rotated/shifted plane that keeps the in-plane axes as
  /// close as possible to this one.
  PlaneFrame reoriented(const Vec3& new_origin, const Vec3& new_normal) const;

  Vec2 to_2d(const Vec3& p) const {
    const Vec3 d = p - origin;
    return {d.dot(u), d.dot(v)};
  }
  Vec3 to_3d(const Vec2& p) const { return origin + p.x() * u + p.y() * v; }
  Vec3 project(const Vec3& p) const { return p - (p - origin).dot(normal) * normal; }
  double signed_distance(const Vec3& p) const { return (p - origin).dot(normal); }
};

}  // namespace planar
