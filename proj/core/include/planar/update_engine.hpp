#pragma once

#include "planar/planar_mesh.hpp"
#include "planar/scan.hpp"

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace planar {

struct FaceHit {
  MeshId mesh = kNoMesh;
  ElemId face = kNoElem;
  double t = 0.0;
};

struct VertexHit {
  MeshId mesh = kNoMesh;
  ElemId vertex = kNoElem;
};

/// Raw output of the two tree queries for one measurement, sorted by
/// (mesh, element) so that downstream choices do not depend on tree shape.
struct SearchResult {
  std::vector<FaceHit> faces;
  std::vector<VertexHit> vertices;
  std::size_t nodes_visited = 0;
};

using ElementsByMesh = std::vector<std::pair<MeshId, std::vector<ElemId>>>;

/// Planar-meshes grouped by which tree reported them and where the point lies
/// relative to their plane. Seeds are never position-checked.
struct ClassifiedCandidates {
  std::vector<MeshId> face_within;
  std::vector<MeshId> face_front;
  ElementsByMesh face_behind;     // with the faces the ray crossed
  std::vector<MeshId> vertex_within;
  std::vector<MeshId> vertex_front;
  std::vector<MeshId> vertex_behind;
  std::vector<MeshId> vertex_seed;
  ElementsByMesh hit_vertices;    // every reported boundary vertex, by mesh
  bool grazing = false;
};

enum class Action { Updated, Grown, Seeded, Skipped };
const char* to_string(Action a) noexcept;

struct IntegrationOutcome {
  Action action = Action::Skipped;
  bool within = false;  // the chosen planar-mesh was position-checked as Within
  MeshId target = kNoMesh;
  ElemId new_vertex = kNoElem;
  std::vector<MeshId> touched;
  std::size_t deleted_faces = 0;
  std::size_t shrunk_edges = 0;
};

SearchResult search(const MapState& map, const Ray& ray);
ClassifiedCandidates classify_candidates(const MapState& map, const Ray& ray, const SearchResult& found);

struct StageTimes {
  double position_check = 0.0;
  double mesh_update = 0.0;
};

/// Classifies the search result against the current map and applies one step
/// of the update rules. `found` must be current for this map state.
IntegrationOutcome commit_point(MapState& map, const Ray& ray, const SearchResult& found,
                                StageTimes* times = nullptr);

/// Search and commit for a single measurement.
IntegrationOutcome integrate_point(MapState& map, const Vec3& origin, const Vec3& lp);

/// Refines the plane of m with the point. Returns the vertex inserted by
/// splitting `hit_face`, or kNoElem.
ElemId op_update(MapState& map, MeshId m, const Ray& ray, ElemId hit_face);
/// Adds the point to m and connects it to the given boundary vertices of m.
/// Returns the new vertex, or kNoElem when the point was only absorbed.
ElemId op_grow(MapState& map, MeshId m, const Ray& ray, std::span<const ElemId> boundary);
MeshId op_new(MapState& map, const Ray& ray);
std::size_t op_delete(MapState& map, const ElementsByMesh& behind);
/// Shrinks the radii of the reported boundary vertices of every mesh other
/// than `chosen` to their distance from `at` and drops edges that got too long.
std::size_t op_shrink(MapState& map, const Vec3& at, MeshId chosen, const ElementsByMesh& hit_vertices);

struct TimingRecord {
  std::size_t scan = 0;
  std::size_t points = 0;
  double search = 0.0;
  double position_check = 0.0;
  double mesh_update = 0.0;
  double tree_maintenance = 0.0;
  double total = 0.0;
  std::size_t updated = 0, grown = 0, seeded = 0, skipped = 0;
  std::size_t researched = 0;  // parallel mode: searches redone at commit
  std::size_t purged_seeds = 0;
};

class ThreadPool;

/// Feeds whole scans into a map. With more than one thread (and not in
/// deterministic mode) the searches of a block of points run in parallel
/// against a frozen map; the points are then committed one by one in input
/// order, re-running the search for any point whose neighbourhood changed
/// since the block started.
class UpdateEngine {
 public:
  explicit UpdateEngine(MapState& map);
  ~UpdateEngine();

  TimingRecord process_scan(const ScanFrame& scan);
  std::size_t scans_processed() const { return scan_index_; }
  void set_block_size(std::size_t n) { block_ = n; }
  /// Optional hook run after every scan (e.g. invariant audits).
  void set_after_scan(std::function<void(const MapState&, std::size_t)> fn) { after_scan_ = std::move(fn); }

 private:
  MapState& map_;
  std::unique_ptr<ThreadPool> pool_;
  std::size_t scan_index_ = 0;
  std::size_t block_ = 2048;
  std::function<void(const MapState&, std::size_t)> after_scan_;
};

}  // namespace planar
