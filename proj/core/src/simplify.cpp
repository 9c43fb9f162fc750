#include "planar/simplify.hpp"

#include "planar/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace planar {

namespace {

// 1 - |d - O|^2 / R^2 for the circumcircle (O, R) of the CCW triangle abc:
// positive strictly inside, scale free.
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const Vec2 ad = a - d, bd = b - d, cd = c - d;
  const double det = ad.squaredNorm() * (bd.x() * cd.y() - cd.x() * bd.y()) -
                     bd.squaredNorm() * (ad.x() * cd.y() - cd.x() * ad.y()) +
                     cd.squaredNorm() * (ad.x() * bd.y() - bd.x() * ad.y());
  const double area2 = orient_2d(a, b, c);
  const double r2 = (b - a).squaredNorm() * (c - b).squaredNorm() * (a - c).squaredNorm() / (4.0 * area2 * area2);
  return det / (area2 * r2);
}

}  // namespace

std::vector<ElemId> sample_vertices(const PlanarMesh& pm) {
  std::vector<ElemId> order = pm.vertices.ids();
  std::sort(order.begin(), order.end(), [&](ElemId a, ElemId b) {
    const double ra = pm.vertices[a].radius, rb = pm.vertices[b].radius;
    return ra != rb ? ra < rb : a < b;
  });
  if (order.size() < 3) return order;

  double rmax = 0.0;
  for (ElemId v : order) rmax = std::max(rmax, pm.vertices[v].radius);
  MeshGrid kept_grid(std::max(rmax, 1e-3));
  std::vector<ElemId> kept;
  for (ElemId v : order) {
    const Vertex& vx = pm.vertices[v];
    const Vec2 lo = vx.pos2.array() - vx.radius, hi = vx.pos2.array() + vx.radius;
    bool blocked = false;
    kept_grid.vertices_in(lo, hi, [&](ElemId k) {
      blocked = blocked || (pm.vertices[k].pos2 - vx.pos2).norm() <= vx.radius;
    });
    if (blocked) continue;
    kept.push_back(v);
    kept_grid.insert_vertex(v, vx.pos2);
  }
  return kept;
}

Triangulation2D delaunay_2d(const std::vector<Vec2>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::CollinearInput, "fewer than three points");

  Vec2 lo = points[0], hi = points[0];
  for (const Vec2& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = std::max((hi - lo).maxCoeff(), 1e-12);
  {
    // Collinear when every point is within a tiny band of the line through
    // the first point and the point farthest from it.
    std::size_t far = 0;
    for (std::size_t i = 1; i < n; ++i)
      if ((points[i] - points[0]).squaredNorm() > (points[far] - points[0]).squaredNorm()) far = i;
    const Vec2 d = points[far] - points[0];
    bool collinear = d.norm() <= 1e-12 * extent;
    if (!collinear) {
      collinear = true;
      for (const Vec2& p : points) {
        if (std::abs(orient_2d(points[0], points[far], p)) / d.norm() > 1e-9 * extent) {
          collinear = false;
          break;
        }
      }
    }
    if (collinear) throw Error(ErrorCode::CollinearInput, "all points are collinear");
  }

  // Super-triangle far outside the input.
  const Vec2 mid = 0.5 * (lo + hi);
  const double s = 1000.0 * extent;
  std::vector<Vec2> pts = points;
  pts.push_back(mid + Vec2(-3.0 * s, -3.0 * s));
  pts.push_back(mid + Vec2(3.0 * s, -3.0 * s));
  pts.push_back(mid + Vec2(0.0, 3.0 * s));

  using Tri = std::array<std::uint32_t, 3>;
  std::vector<Tri> tris{{static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n + 1),
                         static_cast<std::uint32_t>(n + 2)}};
  std::vector<Tri> keep;
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_count;
  for (std::uint32_t i = 0; i < n; ++i) {
    const Vec2& p = pts[i];
    keep.clear();
    edge_count.clear();
    std::vector<Tri> bad;
    for (const Tri& t : tris) {
      if (incircle(pts[t[0]], pts[t[1]], pts[t[2]], p) > kEpsCirc) {
        bad.push_back(t);
      } else {
        keep.push_back(t);
      }
    }
    if (bad.empty()) {
      // Point on a circumcircle of its containing triangle only: split the
      // triangle that contains it.
      for (std::size_t k = 0; k < keep.size(); ++k) {
        const Tri& t = keep[k];
        if (orient_2d(pts[t[0]], pts[t[1]], p) >= 0 && orient_2d(pts[t[1]], pts[t[2]], p) >= 0 &&
            orient_2d(pts[t[2]], pts[t[0]], p) >= 0) {
          bad.push_back(t);
          keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(k));
          break;
        }
      }
    }
    for (const Tri& t : bad) {
      for (int e = 0; e < 3; ++e) {
        std::uint32_t a = t[e], b = t[(e + 1) % 3];
        ++edge_count[{std::min(a, b), std::max(a, b)}];
      }
    }
    for (const Tri& t : bad) {
      for (int e = 0; e < 3; ++e) {
        const std::uint32_t a = t[e], b = t[(e + 1) % 3];
        if (edge_count[{std::min(a, b), std::max(a, b)}] != 1) continue;
        if (orient_2d(pts[a], pts[b], p) <= 0.0) continue;  // duplicate or degenerate point
        keep.push_back({a, b, i});
      }
    }
    tris.swap(keep);
  }

  Triangulation2D out;
  out.points = points;
  for (const Tri& t : tris) {
    if (t[0] >= n || t[1] >= n || t[2] >= n) continue;
    out.triangles.push_back(t);
  }
  std::sort(out.triangles.begin(), out.triangles.end());
  return out;
}

SimplifiedMesh restore_concavity(const Triangulation2D& tri, const std::vector<ElemId>& ids, const PlanarMesh& pm) {
  SimplifiedMesh out;
  out.source_pm = pm.id;
  std::vector<std::uint32_t> remap(tri.points.size(), std::numeric_limits<std::uint32_t>::max());
  for (const auto& t : tri.triangles) {
    const Vec2 c = (tri.points[t[0]] + tri.points[t[1]] + tri.points[t[2]]) / 3.0;
    bool inside = false;
    pm.grid.faces_at(c, [&](ElemId f) {
      if (inside) return;
      const Face& fc = pm.faces[f];
      inside = point_in_triangle_2d(c, pm.vertices[fc.v[0]].pos2, pm.vertices[fc.v[1]].pos2,
                                    pm.vertices[fc.v[2]].pos2, kEpsPlane);
    });
    if (!inside) continue;
    std::array<std::uint32_t, 3> f;
    for (int k = 0; k < 3; ++k) {
      if (remap[t[k]] == std::numeric_limits<std::uint32_t>::max()) {
        remap[t[k]] = static_cast<std::uint32_t>(out.vertices.size());
        const Vertex& v = pm.vertices[ids[t[k]]];
        out.vertices.push_back({v.pos3, v.pos2, ids[t[k]]});
      }
      f[k] = remap[t[k]];
    }
    out.faces.push_back(f);
  }
  return out;
}

namespace {

SimplifiedMesh pass_through(const PlanarMesh& pm) {
  SimplifiedMesh out;
  out.source_pm = pm.id;
  std::vector<std::uint32_t> remap(pm.vertices.capacity(), 0);
  for (ElemId v : pm.vertices.ids()) {
    remap[v] = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.push_back({pm.vertices[v].pos3, pm.vertices[v].pos2, v});
  }
  for (ElemId f : pm.faces.ids()) {
    const Face& fc = pm.faces[f];
    out.faces.push_back({remap[fc.v[0]], remap[fc.v[1]], remap[fc.v[2]]});
  }
  return out;
}

}  // namespace

SimplifiedMesh simplify_planar_mesh(const PlanarMesh& pm) {
  if (pm.vertices.size() < 3 || pm.faces.empty()) return pass_through(pm);
  const std::vector<ElemId> ids = sample_vertices(pm);
  std::vector<Vec2> pts;
  pts.reserve(ids.size());
  for (ElemId v : ids) pts.push_back(pm.vertices[v].pos2);
  try {
    return restore_concavity(delaunay_2d(pts), ids, pm);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::CollinearInput) throw;
    return pass_through(pm);
  }
}

std::vector<SimplifiedMesh> simplify_map(const MapState& map) {
  std::vector<SimplifiedMesh> out;
  for (MeshId id : map.mesh_ids()) {
    const PlanarMesh& pm = map.mesh(id);
    if (pm.faces.empty() && !map.config().emit_faceless_seeds) continue;
    out.push_back(simplify_planar_mesh(pm));
  }
  return out;
}

TriMesh to_trimesh(const MapState& map) {
  TriMesh out;
  for (MeshId id : map.mesh_ids()) {
    const PlanarMesh& pm = map.mesh(id);
    if (pm.faces.empty()) continue;
    std::vector<std::uint32_t> remap(pm.vertices.capacity(), std::numeric_limits<std::uint32_t>::max());
    for (ElemId f : pm.faces.ids()) {
      const Face& fc = pm.faces[f];
      std::array<std::uint32_t, 3> tri;
      for (int k = 0; k < 3; ++k) {
        if (remap[fc.v[k]] == std::numeric_limits<std::uint32_t>::max()) {
          remap[fc.v[k]] = static_cast<std::uint32_t>(out.vertices.size());
          out.vertices.push_back(pm.vertices[fc.v[k]].pos3);
        }
        tri[k] = remap[fc.v[k]];
      }
      out.faces.push_back(tri);
      out.face_group.push_back(id);
    }
  }
  return out;
}

TriMesh to_trimesh(const std::vector<SimplifiedMesh>& meshes) {
  TriMesh out;
  for (const SimplifiedMesh& m : meshes) {
    const auto base = static_cast<std::uint32_t>(out.vertices.size());
    for (const SimplifiedVertex& v : m.vertices) out.vertices.push_back(v.pos3);
    for (const auto& f : m.faces) {
      out.faces.push_back({base + f[0], base + f[1], base + f[2]});
      out.face_group.push_back(m.source_pm);
    }
  }
  return out;
}

}  // namespace planar
