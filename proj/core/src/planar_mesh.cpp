#include "planar/planar_mesh.hpp"

#include "planar/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace planar {

namespace {

constexpr double kMinRadius = 1e-6;
constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

using Clock = std::chrono::steady_clock;

struct CellIndex {
  std::int64_t x, y, z;
};

CellIndex cell_of(const Vec3& p) {
  return {static_cast<std::int64_t>(std::floor(p.x() / kVersionCell)),
          static_cast<std::int64_t>(std::floor(p.y() / kVersionCell)),
          static_cast<std::int64_t>(std::floor(p.z() / kVersionCell))};
}

std::uint64_t cell_key(std::int64_t x, std::int64_t y, std::int64_t z) {
  constexpr std::uint64_t mask = (1u << 21) - 1;
  return ((static_cast<std::uint64_t>(x) & mask) << 42) | ((static_cast<std::uint64_t>(y) & mask) << 21) |
         (static_cast<std::uint64_t>(z) & mask);
}

}  // namespace

ElemId PlanarMesh::find_edge(ElemId a, ElemId b) const {
  const Vertex& va = vertices[a];
  const Vertex& vb = vertices[b];
  const Vertex& small = va.edges.size() <= vb.edges.size() ? va : vb;
  const ElemId other = va.edges.size() <= vb.edges.size() ? b : a;
  for (ElemId e : small.edges) {
    const Edge& ed = edges[e];
    if (ed.v[0] == other || ed.v[1] == other) return e;
  }
  return kNoElem;
}

bool PlanarMesh::is_boundary(ElemId v) const {
  const Vertex& vx = vertices[v];
  if (vx.edges.empty()) return true;
  for (ElemId e : vx.edges) {
    if (edges[e].face_count() < 2) return true;
  }
  return false;
}

MapState::MapState(MapConfig config)
    : config_(std::move(config)),
      fis_(config_.bvh_margin),
      rrs_(config_.bvh_margin),
      mesh_tree_(0.25 * config_.r_max) {}

// ---------------------------------------------------------------- meshes

MeshId MapState::create_mesh(std::size_t scan) {
  const MeshId id = static_cast<MeshId>(meshes_.size());
  auto p = std::make_unique<PlanarMesh>(config_.grid_cell);
  p->id = id;
  p->created_at_scan = scan;
  meshes_.push_back(std::move(p));
  ++live_meshes_;
  return id;
}

MeshId MapState::create_mesh(const PlaneFrame& frame, std::size_t scan) {
  const MeshId id = create_mesh(scan);
  meshes_[id]->framed = true;
  meshes_[id]->frame = frame;
  return id;
}

PlanarMesh& MapState::mesh(MeshId id) {
  if (!has_mesh(id)) throw Error(ErrorCode::UnknownElement, "planar-mesh " + std::to_string(id));
  return *meshes_[id];
}

const PlanarMesh& MapState::mesh(MeshId id) const {
  if (!has_mesh(id)) throw Error(ErrorCode::UnknownElement, "planar-mesh " + std::to_string(id));
  return *meshes_[id];
}

std::vector<MeshId> MapState::mesh_ids() const {
  std::vector<MeshId> out;
  out.reserve(live_meshes_);
  for (std::size_t i = 0; i < meshes_.size(); ++i) {
    if (meshes_[i]) out.push_back(static_cast<MeshId>(i));
  }
  return out;
}

void MapState::erase_mesh(MeshId id) {
  PlanarMesh& p = mesh(id);
  p.faces.for_each([&](ElemId, Face& f) { tree_remove(fis_, f.fis_leaf); });
  p.vertices.for_each([&](ElemId, Vertex& v) {
    if (v.rrs_leaf != kNullNode) tree_remove(rrs_, v.rrs_leaf);
  });
  if (p.mesh_leaf != kNullNode) tree_remove(mesh_tree_, p.mesh_leaf);
  if (!p.bounds.is_empty()) touch(p.bounds.inflated(config_.r_max));
  meshes_[id].reset();
  --live_meshes_;
}

bool MapState::erase_if_empty(MeshId id) {
  if (!has_mesh(id) || !meshes_[id]->vertices.empty()) return false;
  erase_mesh(id);
  return true;
}

// ---------------------------------------------------------------- trees

NodeId MapState::tree_insert(DynamicBvh& t, const LeafPayload& pl, const Aabb& box) {
  const auto t0 = Clock::now();
  const NodeId id = t.insert(pl, box);
  tree_seconds_ += std::chrono::duration<double>(Clock::now() - t0).count();
  return id;
}

void MapState::tree_remove(DynamicBvh& t, NodeId leaf) {
  const auto t0 = Clock::now();
  t.remove(leaf);
  tree_seconds_ += std::chrono::duration<double>(Clock::now() - t0).count();
}

void MapState::tree_update(DynamicBvh& t, NodeId leaf, const Aabb& box) {
  const auto t0 = Clock::now();
  t.update(leaf, box);
  tree_seconds_ += std::chrono::duration<double>(Clock::now() - t0).count();
}

void MapState::touch(const Aabb& box) {
  if (!versioning_ || box.is_empty()) return;
  ++stamp_;
  const CellIndex a = cell_of(box.min), b = cell_of(box.max);
  for (std::int64_t x = a.x; x <= b.x; ++x) {
    for (std::int64_t y = a.y; y <= b.y; ++y) {
      for (std::int64_t z = a.z; z <= b.z; ++z) cell_versions_[cell_key(x, y, z)] = stamp_;
    }
  }
}

bool MapState::region_unchanged(const Vec3& origin, const Vec3& dir, double tmax, const Vec3& endpoint,
                                std::uint64_t since) const {
  auto fresh = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
    auto it = cell_versions_.find(cell_key(x, y, z));
    return it == cell_versions_.end() || it->second <= since;
  };
  const CellIndex e = cell_of(endpoint);
  if (!fresh(e.x, e.y, e.z)) return false;

  // Voxel walk along the segment.
  CellIndex c = cell_of(origin);
  const CellIndex last = cell_of(origin + tmax * dir);
  std::int64_t step[3];
  double t_next[3], t_delta[3];
  const double o[3] = {origin.x(), origin.y(), origin.z()};
  const std::int64_t ci[3] = {c.x, c.y, c.z};
  for (int i = 0; i < 3; ++i) {
    if (dir[i] > 0.0) {
      step[i] = 1;
      t_next[i] = ((static_cast<double>(ci[i]) + 1.0) * kVersionCell - o[i]) / dir[i];
      t_delta[i] = kVersionCell / dir[i];
    } else if (dir[i] < 0.0) {
      step[i] = -1;
      t_next[i] = (static_cast<double>(ci[i]) * kVersionCell - o[i]) / dir[i];
      t_delta[i] = -kVersionCell / dir[i];
    } else {
      step[i] = 0;
      t_next[i] = std::numeric_limits<double>::infinity();
      t_delta[i] = std::numeric_limits<double>::infinity();
    }
  }
  std::int64_t cur[3] = {c.x, c.y, c.z};
  const std::int64_t end[3] = {last.x, last.y, last.z};
  for (int guard = 0; guard < 100000; ++guard) {
    if (!fresh(cur[0], cur[1], cur[2])) return false;
    if (cur[0] == end[0] && cur[1] == end[1] && cur[2] == end[2]) break;
    int axis = 0;
    if (t_next[1] < t_next[axis]) axis = 1;
    if (t_next[2] < t_next[axis]) axis = 2;
    if (t_next[axis] > tmax) break;
    cur[axis] += step[axis];
    t_next[axis] += t_delta[axis];
  }
  return true;
}

// ---------------------------------------------------------------- elements

void MapState::grow_bounds(PlanarMesh& p, const Vec3& x) {
  p.bounds.expand(x);
  if (p.mesh_leaf == kNullNode) {
    p.mesh_leaf = tree_insert(mesh_tree_, {LeafKind::Mesh, p.id, 0}, p.bounds);
  } else {
    tree_update(mesh_tree_, p.mesh_leaf, p.bounds);
  }
}

ElemId MapState::add_vertex(MeshId m, const Vec3& point) {
  PlanarMesh& p = mesh(m);
  Vertex vx;
  if (p.framed) {
    vx.pos2 = p.frame.to_2d(point);
    vx.pos3 = p.frame.to_3d(vx.pos2);
  } else {
    vx.pos3 = point;
  }
  vx.radius = recompute_radius(m, vx.pos3);
  const ElemId id = p.vertices.add(std::move(vx));
  Vertex& ref = p.vertices[id];
  if (p.framed) p.grid.insert_vertex(id, ref.pos2);
  ref.rrs_leaf = tree_insert(rrs_, {LeafKind::BoundaryVertex, m, id}, sphere_box(ref));
  touch(sphere_box(ref));
  grow_bounds(p, ref.pos3);
  return id;
}

ElemId MapState::add_edge(MeshId m, ElemId a, ElemId b) {
  PlanarMesh& p = mesh(m);
  if (!p.framed) throw Error(ErrorCode::InvalidArgument, "edges need a plane frame");
  if (!p.vertices.contains(a) || !p.vertices.contains(b)) throw Error(ErrorCode::UnknownElement, "edge endpoint");
  if (a == b) throw Error(ErrorCode::InvalidArgument, "edge endpoints coincide");
  if (ElemId e = p.find_edge(a, b); e != kNoElem) return e;
  Edge ed;
  ed.v = {a, b};
  const ElemId id = p.edges.add(ed);
  p.vertices[a].edges.push_back(id);
  p.vertices[b].edges.push_back(id);
  p.grid.insert_edge(id, p.vertices[a].pos2, p.vertices[b].pos2);
  refresh_boundary(p, a);
  refresh_boundary(p, b);
  return id;
}

ElemId MapState::add_face(MeshId m, ElemId a, ElemId b, ElemId c) {
  PlanarMesh& p = mesh(m);
  if (!p.framed) throw Error(ErrorCode::InvalidArgument, "faces need a plane frame");
  for (ElemId x : {a, b, c}) {
    if (!p.vertices.contains(x)) throw Error(ErrorCode::UnknownElement, "face corner " + std::to_string(x));
  }
  if (a == b || b == c || c == a) throw Error(ErrorCode::InvalidArgument, "face corners coincide");
  double o = orient_2d(p.vertices[a].pos2, p.vertices[b].pos2, p.vertices[c].pos2);
  if (0.5 * std::abs(o) <= kEpsArea) throw Error(ErrorCode::CollinearInput, "degenerate face");
  if (o < 0.0) {
    std::swap(b, c);
    o = -o;
  }
  const std::array<ElemId, 3> v{a, b, c};
  for (int i = 0; i < 3; ++i) {
    const ElemId e = p.find_edge(v[i], v[(i + 1) % 3]);
    if (e != kNoElem && p.edges[e].face_count() >= 2) {
      throw Error(ErrorCode::EdgeFaceOverflow, "edge " + std::to_string(e) + " already has two faces");
    }
  }
  Face f;
  f.v = v;
  for (int i = 0; i < 3; ++i) f.e[i] = add_edge(m, v[i], v[(i + 1) % 3]);
  f.area = 0.5 * o;
  const ElemId id = p.faces.add(f);
  for (ElemId e : f.e) {
    Edge& ed = p.edges[e];
    if (ed.faces[0] == kNoElem) {
      ed.faces[0] = id;
    } else {
      ed.faces[1] = id;
    }
  }
  const Triangle tri = p.triangle(id);
  p.faces[id].fis_leaf = tree_insert(fis_, {LeafKind::Face, m, id}, tri.bounds());
  p.grid.insert_face(id, p.vertices[a].pos2, p.vertices[b].pos2, p.vertices[c].pos2);
  p.total_area += f.area;
  touch(tri.bounds());
  for (ElemId x : v) refresh_boundary(p, x);
  return id;
}

ElemId MapState::split_face(MeshId m, ElemId f, const Vec3& point) {
  PlanarMesh& p = mesh(m);
  if (!p.faces.contains(f)) throw Error(ErrorCode::UnknownElement, "face " + std::to_string(f));
  const Face fc = p.faces[f];
  const Vec2 q = p.frame.to_2d(point);
  for (int i = 0; i < 3; ++i) {
    const Vec2& a = p.vertices[fc.v[i]].pos2;
    const Vec2& b = p.vertices[fc.v[(i + 1) % 3]].pos2;
    if (orient_2d(a, b, q) <= 2.0 * kEpsArea) return kNoElem;
    if (point_segment_distance_2d(q, a, b) <= config_.dup_eps) return kNoElem;
  }
  detach_face(p, f);
  const ElemId v = add_vertex(m, point);
  add_face(m, fc.v[0], fc.v[1], v);
  add_face(m, fc.v[1], fc.v[2], v);
  add_face(m, fc.v[2], fc.v[0], v);
  return v;
}

void MapState::refresh_boundary(PlanarMesh& p, ElemId v) {
  const bool boundary = p.is_boundary(v);
  Vertex& vx = p.vertices[v];
  if (boundary && vx.rrs_leaf == kNullNode) {
    vx.rrs_leaf = tree_insert(rrs_, {LeafKind::BoundaryVertex, p.id, v}, sphere_box(vx));
    touch(sphere_box(vx));
  } else if (!boundary && vx.rrs_leaf != kNullNode) {
    tree_remove(rrs_, vx.rrs_leaf);
    vx.rrs_leaf = kNullNode;
    touch(sphere_box(vx));
  }
}

void MapState::detach_face(PlanarMesh& p, ElemId f) {
  Face& fc = p.faces[f];
  const Triangle tri = p.triangle(f);
  touch(tri.bounds());
  tree_remove(fis_, fc.fis_leaf);
  p.grid.remove_face(f, p.vertices[fc.v[0]].pos2, p.vertices[fc.v[1]].pos2, p.vertices[fc.v[2]].pos2);
  for (ElemId e : fc.e) {
    Edge& ed = p.edges[e];
    if (ed.faces[0] == f) {
      ed.faces[0] = ed.faces[1];
      ed.faces[1] = kNoElem;
    } else if (ed.faces[1] == f) {
      ed.faces[1] = kNoElem;
    }
  }
  p.total_area -= fc.area;
  p.faces.erase(f);
  if (p.faces.empty()) p.total_area = 0.0;
}

void MapState::detach_edge(PlanarMesh& p, ElemId e) {
  const Edge ed = p.edges[e];
  p.grid.remove_edge(e, p.vertices[ed.v[0]].pos2, p.vertices[ed.v[1]].pos2);
  for (ElemId x : ed.v) {
    auto& list = p.vertices[x].edges;
    list.erase(std::find(list.begin(), list.end(), e));
  }
  p.edges.erase(e);
  for (ElemId x : ed.v) {
    if (!p.vertices.contains(x)) continue;
    if (p.vertices[x].edges.empty()) {
      erase_vertex(p, x);
    } else {
      refresh_boundary(p, x);
    }
  }
}

void MapState::erase_vertex(PlanarMesh& p, ElemId v) {
  Vertex& vx = p.vertices[v];
  if (vx.rrs_leaf != kNullNode) {
    touch(sphere_box(vx));
    tree_remove(rrs_, vx.rrs_leaf);
  }
  if (p.framed) p.grid.remove_vertex(v, vx.pos2);
  p.vertices.erase(v);
}

void MapState::remove_face(MeshId m, ElemId f) {
  PlanarMesh& p = mesh(m);
  if (!p.faces.contains(f)) throw Error(ErrorCode::UnknownElement, "face " + std::to_string(f));
  const auto edges = p.faces[f].e;
  const auto corners = p.faces[f].v;
  detach_face(p, f);
  for (ElemId e : edges) {
    if (p.edges.contains(e) && p.edges[e].face_count() == 0) detach_edge(p, e);
  }
  for (ElemId x : corners) {
    if (p.vertices.contains(x)) refresh_boundary(p, x);
  }
}

void MapState::remove_edge(MeshId m, ElemId e) {
  PlanarMesh& p = mesh(m);
  if (!p.edges.contains(e)) throw Error(ErrorCode::UnknownElement, "edge " + std::to_string(e));
  const auto faces = p.edges[e].faces;
  for (ElemId f : faces) {
    if (f != kNoElem && p.faces.contains(f)) remove_face(m, f);
  }
  if (p.edges.contains(e)) detach_edge(p, e);
}

void MapState::remove_vertex(MeshId m, ElemId v) {
  PlanarMesh& p = mesh(m);
  if (!p.vertices.contains(v)) throw Error(ErrorCode::UnknownElement, "vertex " + std::to_string(v));
  while (p.vertices.contains(v) && !p.vertices[v].edges.empty()) {
    remove_edge(m, p.vertices[v].edges.back());
  }
  if (p.vertices.contains(v)) erase_vertex(p, v);
}

void MapState::set_radius(MeshId m, ElemId v, double r) {
  PlanarMesh& p = mesh(m);
  Vertex& vx = p.vertices.at(v);
  touch(sphere_box(vx));
  vx.radius = std::clamp(r, kMinRadius, config_.r_max);
  if (vx.rrs_leaf != kNullNode) tree_update(rrs_, vx.rrs_leaf, sphere_box(vx));
  touch(sphere_box(vx));
}

// ---------------------------------------------------------------- radius

std::optional<double> MapState::nearest_vertex_distance(MeshId m, const Vec3& x, double bound) const {
  const PlanarMesh& q = mesh(m);
  if (!q.framed) {
    double best = bound;
    bool found = false;
    q.vertices.for_each([&](ElemId, const Vertex& v) {
      const double d = (v.pos3 - x).norm();
      if (d < best) {
        best = d;
        found = true;
      }
    });
    return found ? std::optional<double>(best) : std::nullopt;
  }
  const double h = std::abs(q.frame.signed_distance(x));
  if (h >= bound) return std::nullopt;
  const Vec2 c = q.frame.to_2d(x);
  double best2 = bound * bound - h * h;
  bool found = false;
  const double cell = q.grid.cell();
  const int kmax = static_cast<int>(std::ceil(std::sqrt(best2) / cell)) + 1;
  for (int k = 0; k <= kmax; ++k) {
    if (k >= 1) {
      const double reach = (k - 1) * cell;
      if (reach * reach > best2) break;
    }
    q.grid.vertices_in_ring(c, k, [&](ElemId id) {
      const double d2 = (q.vertices[id].pos2 - c).squaredNorm();
      if (d2 < best2) {
        best2 = d2;
        found = true;
      }
    });
  }
  if (!found) return std::nullopt;
  return std::sqrt(h * h + best2);
}

double MapState::recompute_radius(MeshId owner, const Vec3& x) const {
  double best = config_.r_max;
  std::vector<MeshId> candidates;
  mesh_tree_.query_aabb(aabb_of_sphere(x, best), [&](NodeId, const LeafPayload& pl) {
    // Seeds have no plane yet and would turn every noise outlier into a
    // fake surface next to the real one.
    if (pl.mesh != owner && !is_seed(pl.mesh)) candidates.push_back(pl.mesh);
  });
  std::sort(candidates.begin(), candidates.end());
  for (MeshId c : candidates) {
    if (auto d = nearest_vertex_distance(c, x, best)) best = *d;
  }
  return std::max(best, kMinRadius);
}

// ---------------------------------------------------------------- plane

void MapState::absorb(MeshId m, const Vec3& lp, const Vec3& origin) {
  PlanarMesh& p = mesh(m);
  p.stats = update_stats(p.stats, lp, config_.noise.point_cov);
  auto fit = try_fit_plane(p.stats, origin);
  if (!fit) {
    // Degenerate scatter: keep the previous normal, follow the centroid.
    if (p.has_fit) p.plane.p = p.stats.centroid;
    return;
  }
  Vec3 n = fit->normal;
  if (p.framed && n.dot(p.frame.normal) < 0.0) n = -n;
  p.plane = {p.stats.centroid, n};
  p.uncertainty = fit->uncertainty;
  p.has_fit = true;
  if (!p.framed) {
    p.frame = PlaneFrame::from_normal(p.stats.centroid, n);
    p.framed = true;
    p.vertices.for_each([&](ElemId, Vertex& v) {
      v.pos2 = p.frame.to_2d(v.pos3);
      v.pos3 = p.frame.to_3d(v.pos2);
    });
    resync_geometry(p);
    return;
  }
  reproject(m, false);
}

void MapState::reproject(MeshId m, bool force) {
  PlanarMesh& p = mesh(m);
  if (!p.framed || !p.has_fit) return;
  const Vec3& n = p.plane.normal;
  const Vec3& c = p.plane.p;
  const double cosang = std::clamp(n.dot(p.frame.normal), -1.0, 1.0);
  const double angle_deg = std::acos(cosang) * kRadToDeg;
  const double offset = (c - p.frame.origin).dot(p.frame.normal);
  const bool rotate = force ? angle_deg > 1e-10 : angle_deg > config_.reproject_angle_deg;
  const bool shift = force ? offset != 0.0 : std::abs(offset) > config_.reproject_offset;
  if (rotate) {
    p.frame = p.frame.reoriented(c, n);
    p.vertices.for_each([&](ElemId, Vertex& v) {
      v.pos2 = p.frame.to_2d(v.pos3);
      v.pos3 = p.frame.to_3d(v.pos2);
    });
    resync_geometry(p);
  } else if (shift) {
    // Pure translation along the normal keeps every 2D coordinate.
    p.frame.origin += offset * p.frame.normal;
    if (!p.bounds.is_empty()) touch(p.bounds);
    p.bounds = Aabb::empty();
    p.vertices.for_each([&](ElemId, Vertex& v) {
      v.pos3 = p.frame.to_3d(v.pos2);
      p.bounds.expand(v.pos3);
      if (v.rrs_leaf != kNullNode) tree_update(rrs_, v.rrs_leaf, sphere_box(v));
    });
    p.faces.for_each([&](ElemId f, Face& fc) { tree_update(fis_, fc.fis_leaf, p.triangle(f).bounds()); });
    if (p.mesh_leaf != kNullNode && !p.bounds.is_empty()) tree_update(mesh_tree_, p.mesh_leaf, p.bounds);
    if (!p.bounds.is_empty()) touch(p.bounds.inflated(config_.r_max));
  }
}

void MapState::rebuild_grid(PlanarMesh& p) {
  p.grid.clear();
  p.vertices.for_each([&](ElemId id, const Vertex& v) { p.grid.insert_vertex(id, v.pos2); });
  p.edges.for_each([&](ElemId id, const Edge& e) {
    p.grid.insert_edge(id, p.vertices[e.v[0]].pos2, p.vertices[e.v[1]].pos2);
  });
  p.faces.for_each([&](ElemId id, const Face& f) {
    p.grid.insert_face(id, p.vertices[f.v[0]].pos2, p.vertices[f.v[1]].pos2, p.vertices[f.v[2]].pos2);
  });
}

// After vertex coordinates changed: grid, areas, tree leaves and bounds.
void MapState::resync_geometry(PlanarMesh& p) {
  if (!p.bounds.is_empty()) touch(p.bounds.inflated(config_.r_max));
  rebuild_grid(p);
  p.bounds = Aabb::empty();
  p.vertices.for_each([&](ElemId, Vertex& v) {
    p.bounds.expand(v.pos3);
    if (v.rrs_leaf != kNullNode) tree_update(rrs_, v.rrs_leaf, sphere_box(v));
  });
  double total = 0.0;
  p.faces.for_each([&](ElemId f, Face& fc) {
    fc.area = 0.5 * orient_2d(p.vertices[fc.v[0]].pos2, p.vertices[fc.v[1]].pos2, p.vertices[fc.v[2]].pos2);
    total += fc.area;
    tree_update(fis_, fc.fis_leaf, p.triangle(f).bounds());
  });
  p.total_area = total;
  if (p.mesh_leaf != kNullNode && !p.bounds.is_empty()) tree_update(mesh_tree_, p.mesh_leaf, p.bounds);
  if (!p.bounds.is_empty()) touch(p.bounds.inflated(config_.r_max));
}

void MapState::finalize_scan() {
  for (auto& ptr : meshes_) {
    if (!ptr || !ptr->framed || !ptr->has_fit) continue;
    PlanarMesh& p = *ptr;
    double dev = 0.0;
    p.vertices.for_each([&](ElemId, const Vertex& v) {
      dev = std::max(dev, std::abs((v.pos3 - p.plane.p).dot(p.plane.normal)));
    });
    if (dev > 0.25 * kEpsPlane) reproject(p.id, true);
  }
}

std::size_t MapState::purge_seeds(std::size_t scan, int retention) {
  if (retention < 0) return 0;
  std::size_t purged = 0;
  for (MeshId id : mesh_ids()) {
    const PlanarMesh& p = *meshes_[id];
    if (is_seed(id) && scan >= p.created_at_scan &&
        scan - p.created_at_scan >= static_cast<std::size_t>(retention)) {
      erase_mesh(id);
      ++purged;
    }
  }
  return purged;
}

// ---------------------------------------------------------------- selection

bool MapState::is_seed(MeshId m) const {
  const PlanarMesh& p = mesh(m);
  return p.stats.n < 3 || p.total_area < config_.a_min;
}

MeshId MapState::largest(std::span<const MeshId> ids) const {
  if (ids.empty()) throw Error(ErrorCode::InvalidArgument, "largest() of an empty set");
  MeshId best = kNoMesh;
  double best_area = -1.0;
  for (MeshId id : ids) {
    const double a = mesh(id).total_area;
    if (a > best_area || (a == best_area && id < best)) {
      best_area = a;
      best = id;
    }
  }
  return best;
}

double MapState::distance_to(MeshId m, const Vec3& x) const {
  const PlanarMesh& p = mesh(m);
  if (p.vertices.empty()) return (x - p.stats.centroid).norm();
  double best = std::numeric_limits<double>::infinity();
  p.vertices.for_each([&](ElemId, const Vertex& v) { best = std::min(best, (v.pos3 - x).norm()); });
  return best;
}

MeshId MapState::closest(std::span<const MeshId> ids, const Vec3& x) const {
  if (ids.empty()) throw Error(ErrorCode::InvalidArgument, "closest() of an empty set");
  MeshId best = kNoMesh;
  double best_d = std::numeric_limits<double>::infinity();
  for (MeshId id : ids) {
    const double d = distance_to(id, x);
    if (d < best_d || (d == best_d && id < best)) {
      best_d = d;
      best = id;
    }
  }
  return best;
}

std::size_t MapState::vertex_count() const {
  std::size_t n = 0;
  for (const auto& p : meshes_) n += p ? p->vertices.size() : 0;
  return n;
}

std::size_t MapState::face_count() const {
  std::size_t n = 0;
  for (const auto& p : meshes_) n += p ? p->faces.size() : 0;
  return n;
}

double MapState::total_area() const {
  double a = 0.0;
  for (const auto& p : meshes_) a += p ? p->total_area : 0.0;
  return a;
}

// ---------------------------------------------------------------- audit

std::optional<std::string> MapState::audit(bool check_on_plane) const {
  std::ostringstream err;
  auto fail = [&]() -> std::optional<std::string> { return err.str(); };

  if (auto v = fis_.validate()) return "face tree: " + *v;
  if (auto v = rrs_.validate()) return "vertex tree: " + *v;
  if (auto v = mesh_tree_.validate()) return "mesh tree: " + *v;

  std::size_t faces = 0;
  std::size_t boundary = 0;
  std::size_t live = 0;
  for (const auto& ptr : meshes_) {
    if (!ptr) continue;
    ++live;
    const PlanarMesh& p = *ptr;
    const MeshId m = p.id;
    if (!p.framed && (!p.edges.empty() || !p.faces.empty())) {
      err << "mesh " << m << " has topology but no frame";
      return fail();
    }
    if (!p.vertices.empty() && p.mesh_leaf == kNullNode) {
      err << "mesh " << m << " missing from mesh tree";
      return fail();
    }

    // vertices
    std::optional<std::string> bad;
    p.vertices.for_each([&](ElemId id, const Vertex& v) {
      if (bad) return;
      std::ostringstream e;
      if (!(v.radius > 0.0) || v.radius > config_.r_max + 1e-12) {
        e << "mesh " << m << " vertex " << id << " radius " << v.radius << " out of range";
      }
      for (ElemId ei : v.edges) {
        if (!p.edges.contains(ei) || (p.edges[ei].v[0] != id && p.edges[ei].v[1] != id)) {
          e << "mesh " << m << " vertex " << id << " lists foreign edge " << ei;
          break;
        }
      }
      const bool is_b = p.is_boundary(id);
      if (is_b) {
        ++boundary;
        if (v.rrs_leaf == kNullNode || !rrs_.contains(v.rrs_leaf)) {
          e << "mesh " << m << " boundary vertex " << id << " missing from vertex tree";
        } else {
          const LeafPayload& pl = rrs_.payload(v.rrs_leaf);
          if (pl.kind != LeafKind::BoundaryVertex || pl.mesh != m || pl.element != id) {
            e << "mesh " << m << " vertex " << id << " leaf payload mismatch";
          } else if (!rrs_.fat_bounds(v.rrs_leaf).contains(aabb_of_sphere(v.pos3, v.radius))) {
            e << "mesh " << m << " vertex " << id << " sphere escapes its leaf";
          }
        }
      } else if (v.rrs_leaf != kNullNode) {
        e << "mesh " << m << " interior vertex " << id << " still in vertex tree";
      }
      if (p.framed) {
        const Vec3 back = p.frame.to_3d(v.pos2);
        if ((back - v.pos3).norm() > 1e-9) e << "mesh " << m << " vertex " << id << " 2D/3D mismatch";
      }
      if (check_on_plane && p.framed && p.has_fit) {
        const double dev = std::abs((v.pos3 - p.plane.p).dot(p.plane.normal));
        if (dev > kEpsPlane) e << "mesh " << m << " vertex " << id << " off plane by " << dev;
      }
      if (!e.str().empty()) bad = e.str();
    });
    if (bad) return bad;

    // edges
    p.edges.for_each([&](ElemId id, const Edge& ed) {
      if (bad) return;
      std::ostringstream e;
      if (ed.v[0] == ed.v[1]) e << "mesh " << m << " edge " << id << " is a loop";
      for (ElemId x : ed.v) {
        if (!p.vertices.contains(x)) {
          e << "mesh " << m << " edge " << id << " has dead endpoint " << x;
        } else {
          const auto& l = p.vertices[x].edges;
          if (std::count(l.begin(), l.end(), id) != 1) e << "mesh " << m << " edge " << id << " not listed once by " << x;
        }
      }
      if (ed.faces[0] == kNoElem && ed.faces[1] != kNoElem) e << "mesh " << m << " edge " << id << " face slots unpacked";
      for (ElemId f : ed.faces) {
        if (f == kNoElem) continue;
        if (!p.faces.contains(f)) {
          e << "mesh " << m << " edge " << id << " lists dead face " << f;
        } else if (std::find(p.faces[f].e.begin(), p.faces[f].e.end(), id) == p.faces[f].e.end()) {
          e << "mesh " << m << " edge " << id << " lists face " << f << " that does not use it";
        }
      }
      if (!e.str().empty()) bad = e.str();
    });
    if (bad) return bad;

    // faces
    double area = 0.0;
    p.faces.for_each([&](ElemId id, const Face& f) {
      if (bad) return;
      std::ostringstream e;
      ++faces;
      area += f.area;
      for (int i = 0; i < 3; ++i) {
        const ElemId ei = f.e[i];
        if (!p.edges.contains(ei)) {
          e << "mesh " << m << " face " << id << " dead edge " << ei;
          break;
        }
        const Edge& ed = p.edges[ei];
        const ElemId a = f.v[i], b = f.v[(i + 1) % 3];
        if (!((ed.v[0] == a && ed.v[1] == b) || (ed.v[0] == b && ed.v[1] == a))) {
          e << "mesh " << m << " face " << id << " edge " << ei << " joins the wrong corners";
        }
        if (ed.faces[0] != id && ed.faces[1] != id) e << "mesh " << m << " face " << id << " unknown to edge " << ei;
      }
      if (e.str().empty()) {
        const double o = 0.5 * orient_2d(p.vertices[f.v[0]].pos2, p.vertices[f.v[1]].pos2, p.vertices[f.v[2]].pos2);
        if (!(o > kEpsArea)) e << "mesh " << m << " face " << id << " degenerate or clockwise (area " << o << ")";
        if (std::abs(o - f.area) > 1e-9 * std::max(1.0, o)) e << "mesh " << m << " face " << id << " stale area";
        if (f.fis_leaf == kNullNode || !fis_.contains(f.fis_leaf)) {
          e << "mesh " << m << " face " << id << " missing from face tree";
        } else {
          const LeafPayload& pl = fis_.payload(f.fis_leaf);
          if (pl.kind != LeafKind::Face || pl.mesh != m || pl.element != id) {
            e << "mesh " << m << " face " << id << " leaf payload mismatch";
          } else if (!fis_.fat_bounds(f.fis_leaf).contains(p.triangle(id).bounds())) {
            e << "mesh " << m << " face " << id << " escapes its leaf";
          }
        }
      }
      if (!e.str().empty()) bad = e.str();
    });
    if (bad) return bad;
    if (std::abs(area - p.total_area) > 1e-6 * std::max(1.0, area)) {
      err << "mesh " << m << " total_area " << p.total_area << " != sum " << area;
      return fail();
    }
  }
  if (live != live_meshes_) return std::string("live mesh count mismatch");
  if (faces != fis_.leaf_count()) {
    err << "face tree holds " << fis_.leaf_count() << " leaves for " << faces << " faces";
    return fail();
  }
  if (boundary != rrs_.leaf_count()) {
    err << "vertex tree holds " << rrs_.leaf_count() << " leaves for " << boundary << " boundary vertices";
    return fail();
  }
  return std::nullopt;
}

}  // namespace planar
