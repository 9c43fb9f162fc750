#pragma once

#include "planar/eval.hpp"
#include "planar/planar_mesh.hpp"

#include <array>
#include <vector>

namespace planar {

struct Triangulation2D {
  std::vector<Vec2> points;
  std::vector<std::array<std::uint32_t, 3>> triangles;  // counter-clockwise
};

struct SimplifiedVertex {
  Vec3 pos3;
  Vec2 pos2;
  ElemId source = kNoElem;
};

struct SimplifiedMesh {
  MeshId source_pm = kNoMesh;
  std::vector<SimplifiedVertex> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
};

/// Greedy radius-ordered sampling: ascending (radius, id); a vertex is kept
/// unless an already kept vertex lies within its radius (in the plane frame).
std::vector<ElemId> sample_vertices(const PlanarMesh& pm);

/// Incremental Delaunay triangulation of the convex hull. Cocircular points
/// count as outside a circumcircle. Throws CollinearInput for fewer than three
/// points or a collinear set.
Triangulation2D delaunay_2d(const std::vector<Vec2>& points);

/// Tolerance of the empty-circumcircle test, relative to the squared
/// circumradius.
inline constexpr double kEpsCirc = 1e-9;

/// Keeps the triangles whose centroid lies in (closed) some original face.
/// `ids` maps triangulation points back to vertices of pm.
SimplifiedMesh restore_concavity(const Triangulation2D& tri, const std::vector<ElemId>& ids, const PlanarMesh& pm);

SimplifiedMesh simplify_planar_mesh(const PlanarMesh& pm);
/// All planar-meshes in id order. Faceless meshes are skipped unless
/// emit_faceless_seeds is set. The map is not modified.
std::vector<SimplifiedMesh> simplify_map(const MapState& map);

/// Unsimplified faces of every planar-mesh.
TriMesh to_trimesh(const MapState& map);
TriMesh to_trimesh(const std::vector<SimplifiedMesh>& meshes);

}  // namespace planar
