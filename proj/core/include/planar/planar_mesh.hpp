#pragma once

#include "planar/bvh.hpp"
#include "planar/geometry.hpp"
#include "planar/mesh_grid.hpp"
#include "planar/plane_estimation.hpp"
#include "planar/slot_store.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace planar {

using MeshId = std::uint32_t;
inline constexpr MeshId kNoMesh = std::numeric_limits<MeshId>::max();

struct Vertex {
  Vec3 pos3 = Vec3::Zero();
  Vec2 pos2 = Vec2::Zero();
  double radius = 1.0;
  std::vector<ElemId> edges;
  NodeId rrs_leaf = kNullNode;
};

struct Edge {
  std::array<ElemId, 2> v{kNoElem, kNoElem};
  std::array<ElemId, 2> faces{kNoElem, kNoElem};

  int face_count() const { return (faces[0] != kNoElem) + (faces[1] != kNoElem); }
  ElemId other(ElemId x) const { return v[0] == x ? v[1] : v[0]; }
};

struct Face {
  std::array<ElemId, 3> v{kNoElem, kNoElem, kNoElem};  // counter-clockwise in the frame
  std::array<ElemId, 3> e{kNoElem, kNoElem, kNoElem};  // e[i] joins v[i] and v[(i+1)%3]
  double area = 0.0;
  NodeId fis_leaf = kNullNode;
};

struct MapConfig {
  SensorNoiseModel noise{};
  double z_crit = kZCrit;
  double r_max = 1.0;           // m
  double a_min = 0.01;          // m^2, below this a planar-mesh is a seed
  double bvh_margin = 0.05;     // m, fat-box margin of the face and vertex trees
  double endpoint_slack = 0.05; // m, ray segment extension past the endpoint
  double cos_grazing = kCosGrazing;
  double reproject_angle_deg = 0.5;
  double reproject_offset = 0.002;  // m
  double grid_cell = 0.25;          // m, per-mesh 2D grid
  double dup_eps = 1e-3;            // m, points this close to a vertex or edge add no vertex
  int seed_retention = -1;          // scans; negative keeps seeds forever
  int threads = 1;
  bool deterministic = true;
  bool emit_faceless_seeds = false;  // simplification output
};

/// One plane plus the triangle mesh embedded in it.
///
/// Two planes are kept. `plane`/`uncertainty` come from the running sample
/// statistics and drive the position check. `frame` is the plane the vertices
/// are actually stored in; it follows the estimate lazily (see MapState::absorb)
/// and is snapped onto it at every scan boundary.
struct PlanarMesh {
  MeshId id = kNoMesh;
  std::size_t created_at_scan = 0;

  PlaneStats stats;
  bool has_fit = false;
  Plane plane;
  ParamUncertainty uncertainty;

  bool framed = false;
  PlaneFrame frame;

  SlotStore<Vertex> vertices;
  SlotStore<Edge> edges;
  SlotStore<Face> faces;
  double total_area = 0.0;

  MeshGrid grid;
  Aabb bounds;  // over vertex positions; grows monotonically between rebuilds
  NodeId mesh_leaf = kNullNode;

  explicit PlanarMesh(double grid_cell) : grid(grid_cell) {}

  ElemId find_edge(ElemId a, ElemId b) const;
  bool is_boundary(ElemId v) const;
  Triangle triangle(ElemId f) const {
    const Face& fc = faces[f];
    return {vertices[fc.v[0]].pos3, vertices[fc.v[1]].pos3, vertices[fc.v[2]].pos3};
  }
  double edge_length(ElemId e) const {
    return (vertices[edges[e].v[0]].pos2 - vertices[edges[e].v[1]].pos2).norm();
  }
};

/// Every planar-mesh of the map plus the search trees kept in bijection with
/// them: faces in the face tree, boundary vertices (radius spheres) in the
/// vertex tree, and whole-mesh boxes in a third tree used for radius lookups.
///
/// Not internally synchronized: one writer at a time, or any number of
/// readers while nobody writes.
class MapState {
 public:
  explicit MapState(MapConfig config = {});
  MapState(const MapState&) = delete;
  MapState& operator=(const MapState&) = delete;

  const MapConfig& config() const { return config_; }
  MapConfig& mutable_config() { return config_; }

  MeshId create_mesh(std::size_t scan);
  /// A mesh whose plane is given up front (tests, deserialization).
  MeshId create_mesh(const PlaneFrame& frame, std::size_t scan);
  void erase_mesh(MeshId id);
  /// Erases the mesh if it has no vertices left. Returns true if erased.
  bool erase_if_empty(MeshId id);

  bool has_mesh(MeshId id) const { return id < meshes_.size() && meshes_[id] != nullptr; }
  PlanarMesh& mesh(MeshId id);
  const PlanarMesh& mesh(MeshId id) const;
  std::vector<MeshId> mesh_ids() const;
  std::size_t mesh_count() const { return live_meshes_; }
  MeshId next_mesh_id() const { return static_cast<MeshId>(meshes_.size()); }

  ElemId add_vertex(MeshId m, const Vec3& point);
  /// Returns the existing edge when a and b are already connected.
  ElemId add_edge(MeshId m, ElemId a, ElemId b);
  /// Creates missing edges; reorders corners to counter-clockwise. Throws
  /// EdgeFaceOverflow when an edge already has two faces and CollinearInput
  /// for a degenerate triangle.
  ElemId add_face(MeshId m, ElemId a, ElemId b, ElemId c);
  /// Splits face f at an interior point into three faces. Returns the new
  /// vertex or kNoElem when the point is not safely inside.
  ElemId split_face(MeshId m, ElemId f, const Vec3& point);

  // Cascading removals: an edge left without faces is removed, and a vertex
  // left without edges is removed. Throw UnknownElement.
  void remove_face(MeshId m, ElemId f);
  void remove_edge(MeshId m, ElemId e);
  void remove_vertex(MeshId m, ElemId v);

  void set_radius(MeshId m, ElemId v, double r);
  /// min(r_max, distance to the nearest vertex of any other non-seed planar-mesh).
  double recompute_radius(MeshId owner, const Vec3& p) const;
  /// Distance from p to the nearest vertex of mesh m, if below `bound`.
  std::optional<double> nearest_vertex_distance(MeshId m, const Vec3& p, double bound) const;

  /// Absorbs a sample into the plane statistics, refits the plane (normal
  /// toward `origin`) and applies the lazy reprojection policy.
  void absorb(MeshId m, const Vec3& lp, const Vec3& origin);
  /// Moves the frame onto the estimated plane and reprojects all vertices.
  /// `force` skips the angle/offset thresholds.
  void reproject(MeshId m, bool force);

  bool is_seed(MeshId m) const;
  MeshId largest(std::span<const MeshId> ids) const;
  MeshId closest(std::span<const MeshId> ids, const Vec3& p) const;
  /// Nearest-vertex distance, or centroid distance for a mesh with no vertices.
  double distance_to(MeshId m, const Vec3& p) const;

  void begin_scan(std::size_t scan) { current_scan_ = scan; }
  std::size_t current_scan() const { return current_scan_; }
  /// Snaps every frame onto its estimated plane. Run between scans.
  void finalize_scan();
  /// Erases seeds whose age in scans reached `retention`. Negative keeps all.
  std::size_t purge_seeds(std::size_t scan, int retention);

  /// Full structural check. Plane checks assume a quiescent, finalized map.
  std::optional<std::string> audit(bool check_on_plane = true) const;

  const DynamicBvh& fis_tree() const { return fis_; }
  const DynamicBvh& rrs_tree() const { return rrs_; }
  const DynamicBvh& mesh_tree() const { return mesh_tree_; }

  std::size_t vertex_count() const;
  std::size_t face_count() const;
  double total_area() const;

  // Change tracking for optimistic parallel integration. When enabled, every
  // geometry change bumps the version of the world cells its bounds overlap.
  void enable_versioning(bool on) { versioning_ = on; }
  std::uint64_t stamp() const { return stamp_; }
  /// True when nothing that could alter a search along the segment
  /// origin + t*dir, t in [0, tmax], or at its endpoint changed after `since`.
  bool region_unchanged(const Vec3& origin, const Vec3& dir, double tmax, const Vec3& endpoint,
                        std::uint64_t since) const;

  double tree_seconds() const { return tree_seconds_; }
  void reset_tree_seconds() { tree_seconds_ = 0.0; }

 private:
  friend class MapIo;

  PlanarMesh& pm(MeshId id) { return *meshes_[id]; }
  void refresh_boundary(PlanarMesh& p, ElemId v);
  void detach_face(PlanarMesh& p, ElemId f);
  void detach_edge(PlanarMesh& p, ElemId e);
  void erase_vertex(PlanarMesh& p, ElemId v);
  void rebuild_grid(PlanarMesh& p);
  void resync_geometry(PlanarMesh& p);
  void grow_bounds(PlanarMesh& p, const Vec3& x);
  void touch(const Aabb& box);
  Aabb sphere_box(const Vertex& v) const { return aabb_of_sphere(v.pos3, v.radius); }

  NodeId tree_insert(DynamicBvh& t, const LeafPayload& pl, const Aabb& box);
  void tree_remove(DynamicBvh& t, NodeId leaf);
  void tree_update(DynamicBvh& t, NodeId leaf, const Aabb& box);

  MapConfig config_;
  std::vector<std::unique_ptr<PlanarMesh>> meshes_;
  std::size_t live_meshes_ = 0;
  DynamicBvh fis_;
  DynamicBvh rrs_;
  DynamicBvh mesh_tree_;
  std::size_t current_scan_ = 0;

  bool versioning_ = false;
  std::uint64_t stamp_ = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> cell_versions_;
  double tree_seconds_ = 0.0;
  bool time_trees_ = true;
};

inline constexpr double kVersionCell = 1.0;  // m

}  // namespace planar
