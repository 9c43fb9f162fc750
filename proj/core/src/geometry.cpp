#include "planar/geometry.hpp"

#include "planar/error.hpp"

#include <algorithm>
#include <cmath>

namespace planar {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroLengthRay: return "ZeroLengthRay";
    case ErrorCode::DuplicatePayload: return "DuplicatePayload";
    case ErrorCode::UnknownLeaf: return "UnknownLeaf";
    case ErrorCode::DegeneratePlane: return "DegeneratePlane";
    case ErrorCode::GrazingRay: return "GrazingRay";
    case ErrorCode::EdgeFaceOverflow: return "EdgeFaceOverflow";
    case ErrorCode::UnknownElement: return "UnknownElement";
    case ErrorCode::CollinearInput: return "CollinearInput";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::NonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Ray ray_from_measurement(const Vec3& origin, const Vec3& endpoint) {
  const Vec3 d = endpoint - origin;
  const double range = d.norm();
  if (!(range >= 1e-9)) {
    throw Error(ErrorCode::ZeroLengthRay, "origin and endpoint coincide");
  }
  Ray ray;
  ray.origin = origin;
  ray.dir = d / range;
  ray.endpoint = endpoint;
  ray.range = range;
  return ray;
}

Aabb aabb_union(const Aabb& a, const Aabb& b) {
  return {a.min.cwiseMin(b.min), a.max.cwiseMax(b.max)};
}

double aabb_surface_area(const Aabb& b) {
  if (b.is_empty()) return 0.0;
  const Vec3 e = b.extent();
  return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
}

Aabb aabb_of_sphere(const Vec3& center, double radius) {
  return {center.array() - radius, center.array() + radius};
}

bool ray_aabb_intersect(const Vec3& origin, const Vec3& inv_dir, double tmax, const Aabb& box) {
  double t0 = 0.0;
  double t1 = tmax;
  for (int i = 0; i < 3; ++i) {
    double ta = (box.min[i] - origin[i]) * inv_dir[i];
    double tb = (box.max[i] - origin[i]) * inv_dir[i];
    // 0 * inf yields NaN when the origin lies on a slab plane of a parallel ray;
    // such a ray is inside that slab.
    if (std::isnan(ta) || std::isnan(tb)) {
      if (origin[i] < box.min[i] || origin[i] > box.max[i]) return false;
      continue;
    }
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

bool ray_aabb_intersect(const Ray& ray, double tmax, const Aabb& box) {
  const Vec3 inv = ray.dir.cwiseInverse();
  return ray_aabb_intersect(ray.origin, inv, tmax, box);
}

std::optional<double> ray_triangle_intersect(const Vec3& origin, const Vec3& dir, double tmax,
                                             const Triangle& tri) {
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 n = e1.cross(e2);
  if (0.5 * n.norm() <= kEpsArea) return std::nullopt;

  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) <= 1e-300) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = origin - tri.a;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qvec) * inv_det;
  if (t <= kEpsRay || t > tmax) return std::nullopt;
  return t;
}

std::optional<double> ray_triangle_intersect(const Ray& ray, const Triangle& tri, double slack) {
  return ray_triangle_intersect(ray.origin, ray.dir, ray.range + slack, tri);
}

double orient_2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

namespace {
int sign_of(double x) { return (x > 0.0) - (x < 0.0); }
}  // namespace

bool segment_intersect_2d(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
  const int o1 = sign_of(orient_2d(a0, a1, b0));
  const int o2 = sign_of(orient_2d(a0, a1, b1));
  const int o3 = sign_of(orient_2d(b0, b1, a0));
  const int o4 = sign_of(orient_2d(b0, b1, a1));
  return o1 * o2 < 0 && o3 * o4 < 0;
}

bool point_in_triangle_2d(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c, double eps) {
  const double twice_area = orient_2d(a, b, c);
  if (std::abs(twice_area) <= 2.0 * kEpsArea) return false;
  const double s = twice_area > 0.0 ? 1.0 : -1.0;
  const std::array<const Vec2*, 3> v{&a, &b, &c};
  for (int i = 0; i < 3; ++i) {
    const Vec2& p0 = *v[i];
    const Vec2& p1 = *v[(i + 1) % 3];
    const double len = (p1 - p0).norm();
    if (s * orient_2d(p0, p1, p) < -eps * len) return false;
  }
  return true;
}

double point_segment_distance_2d(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

PlaneFrame PlaneFrame::from_normal(const Vec3& origin, const Vec3& normal) {
  PlaneFrame f;
  f.origin = origin;
  f.normal = normal.normalized();
  // Seed u with the world axis least aligned with the normal.
  Vec3 axis = Vec3::UnitX();
  const Vec3 a = f.normal.cwiseAbs();
  if (a.y() <= a.x() && a.y() <= a.z()) {
    axis = Vec3::UnitY();
  } else if (a.z() <= a.x() && a.z() <= a.y()) {
    axis = Vec3::UnitZ();
  }
  f.u = (axis - axis.dot(f.normal) * f.normal).normalized();
  f.v = f.normal.cross(f.u);
  return f;
}

PlaneFrame PlaneFrame::reoriented(const Vec3& new_origin, const Vec3& new_normal) const {
  const Vec3 n = new_normal.normalized();
  Vec3 u_new = u - u.dot(n) * n;
  if (u_new.norm() < 1e-6) return from_normal(new_origin, n);
  PlaneFrame f;
  f.normal = n;
  f.u = u_new.normalized();
  f.v = n.cross(f.u);
  f.origin = new_origin;
  return f;
}

}  // namespace planar
