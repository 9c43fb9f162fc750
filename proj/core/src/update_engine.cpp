#include "planar/update_engine.hpp"

#include "planar/error.hpp"
#include "planar/thread_pool.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace planar {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Tests the open segment a-b (ids ia, ib) against the mesh: blocked by a
// proper crossing with an existing edge or by a vertex lying on it.
bool segment_blocked(const PlanarMesh& p, const Vec2& a, const Vec2& b, ElemId ia, ElemId ib, double eps) {
  const Vec2 lo = a.cwiseMin(b).array() - eps;
  const Vec2 hi = a.cwiseMax(b).array() + eps;
  bool blocked = false;
  p.grid.edges_in(lo, hi, [&](ElemId e) {
    if (blocked) return;
    const Edge& ed = p.edges[e];
    if (ed.v[0] == ia || ed.v[1] == ia || ed.v[0] == ib || ed.v[1] == ib) return;
    const Vec2& e0 = p.vertices[ed.v[0]].pos2;
    const Vec2& e1 = p.vertices[ed.v[1]].pos2;
    if ((e0.cwiseMax(e1).array() < lo.array()).any() || (e0.cwiseMin(e1).array() > hi.array()).any()) return;
    if (segment_intersect_2d(a, b, e0, e1)) blocked = true;
  });
  if (blocked) return true;
  p.grid.vertices_in(lo, hi, [&](ElemId v) {
    if (blocked || v == ia || v == ib) return;
    if (point_segment_distance_2d(p.vertices[v].pos2, a, b) < eps) blocked = true;
  });
  return blocked;
}

bool triangle_holds_vertex(const PlanarMesh& p, const Vec2& a, const Vec2& b, const Vec2& c,
                           std::array<ElemId, 3> corners) {
  const Vec2 lo = a.cwiseMin(b).cwiseMin(c);
  const Vec2 hi = a.cwiseMax(b).cwiseMax(c);
  bool found = false;
  p.grid.vertices_in(lo, hi, [&](ElemId v) {
    if (found || v == corners[0] || v == corners[1] || v == corners[2]) return;
    if (point_in_triangle_2d(p.vertices[v].pos2, a, b, c)) found = true;
  });
  return found;
}

template <class T>
void group_sorted(const std::vector<T>& hits, ElementsByMesh& out, ElemId T::*elem) {
  for (const T& h : hits) {
    if (out.empty() || out.back().first != h.mesh) out.push_back({h.mesh, {}});
    out.back().second.push_back(h.*elem);
  }
}

}  // namespace

const char* to_string(Action a) noexcept {
  switch (a) {
    case Action::Updated: return "Updated";
    case Action::Grown: return "Grown";
    case Action::Seeded: return "Seeded";
    case Action::Skipped: return "Skipped";
  }
  return "Unknown";
}

// ---------------------------------------------------------------- search

SearchResult search(const MapState& map, const Ray& ray) {
  SearchResult r;
  QueryStats stats;
  const double tmax = ray.range + map.config().endpoint_slack;
  auto face_hits = map.fis_tree().query_ray(
      ray.origin, ray.dir, tmax,
      [&](const LeafPayload& pl) -> std::optional<double> {
        return ray_triangle_intersect(ray.origin, ray.dir, tmax, map.mesh(pl.mesh).triangle(pl.element));
      },
      &stats);
  r.faces.reserve(face_hits.size());
  for (const RayHit& h : face_hits) r.faces.push_back({h.payload.mesh, h.payload.element, h.t});

  const Vec3& lp = ray.endpoint;
  auto verts = map.rrs_tree().query_point(
      lp,
      [&](const LeafPayload& pl) {
        const Vertex& v = map.mesh(pl.mesh).vertices[pl.element];
        return (v.pos3 - lp).squaredNorm() <= v.radius * v.radius;
      },
      &stats);
  r.vertices.reserve(verts.size());
  for (const LeafPayload& pl : verts) r.vertices.push_back({pl.mesh, pl.element});

  std::sort(r.faces.begin(), r.faces.end(),
            [](const FaceHit& a, const FaceHit& b) { return a.mesh != b.mesh ? a.mesh < b.mesh : a.face < b.face; });
  std::sort(r.vertices.begin(), r.vertices.end(), [](const VertexHit& a, const VertexHit& b) {
    return a.mesh != b.mesh ? a.mesh < b.mesh : a.vertex < b.vertex;
  });
  r.nodes_visited = stats.nodes_visited;
  return r;
}

// ---------------------------------------------------------------- classification

namespace {

// nullopt for grazing rays.
std::optional<Position> position_of(const MapState& map, const PlanarMesh& p, const Ray& ray) {
  const MapConfig& cfg = map.config();
  if (!try_expected_range(p.plane, ray, cfg.cos_grazing)) return std::nullopt;
  const RangeModel model = range_sigma(p.plane, p.uncertainty, ray, cfg.noise, cfg.cos_grazing);
  return classify(ray.range, model, cfg.z_crit).position;
}

bool checkable(const MapState& map, const PlanarMesh& p) { return p.has_fit && !map.is_seed(p.id); }

}  // namespace

ClassifiedCandidates classify_candidates(const MapState& map, const Ray& ray, const SearchResult& found) {
  ClassifiedCandidates c;
  ElementsByMesh faces;
  group_sorted(found.faces, faces, &FaceHit::face);
  for (auto& [m, ids] : faces) {
    const PlanarMesh& p = map.mesh(m);
    if (!checkable(map, p)) continue;
    const auto pos = position_of(map, p, ray);
    if (!pos) {
      c.grazing = true;
      return c;
    }
    switch (*pos) {
      case Position::Within: c.face_within.push_back(m); break;
      case Position::Front: c.face_front.push_back(m); break;
      case Position::Behind: c.face_behind.push_back({m, std::move(ids)}); break;
    }
  }
  group_sorted(found.vertices, c.hit_vertices, &VertexHit::vertex);
  for (const auto& [m, ids] : c.hit_vertices) {
    const PlanarMesh& p = map.mesh(m);
    if (!checkable(map, p)) {
      c.vertex_seed.push_back(m);
      continue;
    }
    const auto pos = position_of(map, p, ray);
    if (!pos) {
      c.grazing = true;
      return c;
    }
    switch (*pos) {
      case Position::Within: c.vertex_within.push_back(m); break;
      case Position::Front: c.vertex_front.push_back(m); break;
      case Position::Behind: c.vertex_behind.push_back(m); break;
    }
  }
  return c;
}

// ---------------------------------------------------------------- operations

ElemId op_update(MapState& map, MeshId m, const Ray& ray, ElemId hit_face) {
  map.absorb(m, ray.endpoint, ray.origin);
  const PlanarMesh& p = map.mesh(m);
  if (hit_face == kNoElem || !p.faces.contains(hit_face) || !p.framed) return kNoElem;

  // Refine only where the local radius says the tessellation is too coarse.
  const Face& f = p.faces[hit_face];
  double mean_edge = 0.0;
  for (ElemId e : f.e) mean_edge += p.edge_length(e);
  mean_edge /= 3.0;
  const Vec3 q = p.frame.project(ray.endpoint);
  const double r = map.recompute_radius(m, q);
  if (!(r < mean_edge)) return kNoElem;
  const Vec2 q2 = p.frame.to_2d(q);
  for (ElemId v : f.v) {
    if ((p.vertices[v].pos2 - q2).norm() <= r) return kNoElem;
  }
  return map.split_face(m, hit_face, ray.endpoint);
}

ElemId op_grow(MapState& map, MeshId m, const Ray& ray, std::span<const ElemId> boundary) {
  const Vec3& lp = ray.endpoint;
  map.absorb(m, lp, ray.origin);
  PlanarMesh& p = map.mesh(m);
  if (!p.framed) return map.add_vertex(m, lp);

  const double eps = map.config().dup_eps;
  const Vec2 q = p.frame.to_2d(lp);

  // Already covered, or too close to existing elements to add anything.
  bool covered = false;
  p.grid.faces_at(q, [&](ElemId f) {
    if (covered) return;
    const Face& fc = p.faces[f];
    covered = point_in_triangle_2d(q, p.vertices[fc.v[0]].pos2, p.vertices[fc.v[1]].pos2, p.vertices[fc.v[2]].pos2);
  });
  if (covered) return kNoElem;
  const Vec2 lo = q.array() - eps, hi = q.array() + eps;
  p.grid.vertices_in(lo, hi, [&](ElemId v) { covered = covered || (p.vertices[v].pos2 - q).norm() < eps; });
  if (covered) return kNoElem;
  p.grid.edges_in(lo, hi, [&](ElemId e) {
    if (covered) return;
    const Edge& ed = p.edges[e];
    covered = point_segment_distance_2d(q, p.vertices[ed.v[0]].pos2, p.vertices[ed.v[1]].pos2) < eps;
  });
  if (covered) return kNoElem;

  const ElemId v = map.add_vertex(m, lp);
  const double rv = p.vertices[v].radius;

  struct Candidate {
    ElemId id;
    double angle;
  };
  std::vector<Candidate> cands;
  for (ElemId c : boundary) {
    if (c == v || !p.vertices.contains(c) || !p.is_boundary(c)) continue;
    const Vec2 d = p.vertices[c].pos2 - q;
    const double len = d.norm();
    if (len <= eps || len > std::min(p.vertices[c].radius, rv)) continue;
    cands.push_back({c, std::atan2(d.y(), d.x())});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return a.angle != b.angle ? a.angle < b.angle : a.id < b.id;
  });

  std::vector<Candidate> committed;
  for (const Candidate& c : cands) {
    if (segment_blocked(p, q, p.vertices[c.id].pos2, v, c.id, eps)) continue;
    map.add_edge(m, v, c.id);
    committed.push_back(c);
  }

  const std::size_t k = committed.size();
  if (k < 2) return v;
  for (std::size_t i = 0; i < k; ++i) {
    const Candidate& ca = committed[i];
    const Candidate& cb = committed[(i + 1) % k];
    double gap = cb.angle - ca.angle;
    if (gap <= 0.0) gap += 2.0 * std::numbers::pi;
    if (gap >= std::numbers::pi) continue;
    const Vec2& pa = p.vertices[ca.id].pos2;
    const Vec2& pb = p.vertices[cb.id].pos2;
    const double o = orient_2d(q, pa, pb);
    if (o <= 2.0 * kEpsArea) continue;
    if (triangle_holds_vertex(p, q, pa, pb, {v, ca.id, cb.id})) continue;

    const ElemId closing = p.find_edge(ca.id, cb.id);
    if (closing != kNoElem) {
      const Edge& ed = p.edges[closing];
      if (ed.face_count() >= 2) continue;
      if (ed.face_count() == 1) {
        const Face& other = p.faces[ed.faces[0]];
        ElemId third = kNoElem;
        for (ElemId x : other.v) {
          if (x != ca.id && x != cb.id) third = x;
        }
        const double side = orient_2d(pa, pb, p.vertices[third].pos2);
        if ((side > 0.0) == (orient_2d(pa, pb, q) > 0.0)) continue;
      }
    } else {
      const double len = (pb - pa).norm();
      if (len > std::min(p.vertices[ca.id].radius, p.vertices[cb.id].radius)) continue;
      if (segment_blocked(p, pa, pb, ca.id, cb.id, eps)) continue;
    }
    if (p.edges[p.find_edge(v, ca.id)].face_count() >= 2 || p.edges[p.find_edge(v, cb.id)].face_count() >= 2) continue;
    map.add_face(m, v, ca.id, cb.id);
  }
  return v;
}

MeshId op_new(MapState& map, const Ray& ray) {
  const MeshId m = map.create_mesh(map.current_scan());
  map.absorb(m, ray.endpoint, ray.origin);
  map.add_vertex(m, ray.endpoint);
  return m;
}

namespace {

// Lowers r(v) to its distance from `at` and drops the edges of v that became
// longer than the new radius. Returns the number of edges removed.
std::size_t shrink_vertex(MapState& map, MeshId m, ElemId v, const Vec3& at) {
  PlanarMesh& p = map.mesh(m);
  const double d = (p.vertices[v].pos3 - at).norm();
  if (!(d < p.vertices[v].radius)) return 0;
  map.set_radius(m, v, d);
  const double r = p.vertices[v].radius;
  std::vector<ElemId> too_long;
  for (ElemId e : p.vertices[v].edges) {
    if (p.edge_length(e) > r) too_long.push_back(e);
  }
  std::size_t n = 0;
  for (ElemId e : too_long) {
    if (!p.edges.contains(e)) continue;
    map.remove_edge(m, e);
    ++n;
  }
  if (p.vertices.contains(v) && p.vertices[v].edges.empty()) map.remove_vertex(m, v);
  return n;
}

}  // namespace

std::size_t op_delete(MapState& map, const ElementsByMesh& behind) {
  std::size_t n = 0;
  for (const auto& [m, faces] : behind) {
    if (!map.has_mesh(m)) continue;
    for (ElemId f : faces) {
      if (!map.has_mesh(m)) break;
      if (!map.mesh(m).faces.contains(f)) continue;
      map.remove_face(m, f);
      ++n;
    }
    map.erase_if_empty(m);
  }
  return n;
}

std::size_t op_shrink(MapState& map, const Vec3& at, MeshId chosen, const ElementsByMesh& hit_vertices) {
  std::size_t n = 0;
  for (const auto& [m, verts] : hit_vertices) {
    if (m == chosen || !map.has_mesh(m)) continue;
    for (ElemId v : verts) {
      if (!map.has_mesh(m)) break;
      if (map.mesh(m).vertices.contains(v)) n += shrink_vertex(map, m, v, at);
    }
    map.erase_if_empty(m);
  }
  return n;
}

// ---------------------------------------------------------------- dispatch

IntegrationOutcome commit_point(MapState& map, const Ray& ray, const SearchResult& found, StageTimes* times) {
  IntegrationOutcome out;
  auto t0 = Clock::now();
  ClassifiedCandidates c = classify_candidates(map, ray, found);
  if (times) times->position_check += seconds_since(t0);
  if (c.grazing) return out;

  t0 = Clock::now();
  const Vec3& lp = ray.endpoint;
  if (!c.face_within.empty()) {
    out.target = map.largest(c.face_within);
    ElemId hit = kNoElem;
    double best = std::numeric_limits<double>::infinity();
    for (const FaceHit& h : found.faces) {
      if (h.mesh == out.target && std::abs(h.t - ray.range) < best) {
        best = std::abs(h.t - ray.range);
        hit = h.face;
      }
    }
    out.new_vertex = op_update(map, out.target, ray, hit);
    out.action = Action::Updated;
    out.within = true;
  } else if (!c.vertex_within.empty() || !c.vertex_seed.empty()) {
    out.within = !c.vertex_within.empty();
    out.target = out.within ? map.largest(c.vertex_within) : map.closest(c.vertex_seed, lp);
    std::span<const ElemId> boundary;
    for (const auto& [m, ids] : c.hit_vertices) {
      if (m == out.target) boundary = ids;
    }
    out.new_vertex = op_grow(map, out.target, ray, boundary);
    out.action = Action::Grown;
  } else {
    out.target = op_new(map, ray);
    out.action = Action::Seeded;
  }
  out.touched.push_back(out.target);

  if (out.within) {
    out.deleted_faces = op_delete(map, c.face_behind);
    for (const auto& [m, ids] : c.face_behind) out.touched.push_back(m);
    Vec3 at = lp;
    if (out.new_vertex != kNoElem && map.has_mesh(out.target)) at = map.mesh(out.target).vertices[out.new_vertex].pos3;
    out.shrunk_edges = op_shrink(map, at, out.target, c.hit_vertices);
    for (const auto& [m, ids] : c.hit_vertices) {
      if (m != out.target) out.touched.push_back(m);
    }
  }
  if (times) times->mesh_update += seconds_since(t0);
  return out;
}

IntegrationOutcome integrate_point(MapState& map, const Vec3& origin, const Vec3& lp) {
  Ray ray;
  try {
    ray = ray_from_measurement(origin, lp);
  } catch (const Error&) {
    return {};
  }
  return commit_point(map, ray, search(map, ray));
}

// ---------------------------------------------------------------- scans

UpdateEngine::UpdateEngine(MapState& map) : map_(map) {
  const MapConfig& cfg = map_.config();
  if (!cfg.deterministic && cfg.threads > 1) {
    pool_ = std::make_unique<ThreadPool>(cfg.threads);
    map_.enable_versioning(true);
  }
}

UpdateEngine::~UpdateEngine() = default;

TimingRecord UpdateEngine::process_scan(const ScanFrame& scan) {
  const auto t_start = Clock::now();
  TimingRecord rec;
  rec.scan = scan_index_;
  rec.points = scan.points.size();
  map_.begin_scan(scan_index_);
  const double tree0 = map_.tree_seconds();

  std::vector<Ray> rays;
  rays.reserve(scan.points.size());
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const Vec3& o = scan.origin(i);
    const Vec3& p = scan.points[i];
    if ((p - o).norm() < 1e-9 || !p.allFinite()) {
      ++rec.skipped;
      continue;
    }
    rays.push_back(ray_from_measurement(o, p));
  }

  StageTimes st;
  auto tally = [&](const IntegrationOutcome& out) {
    switch (out.action) {
      case Action::Updated: ++rec.updated; break;
      case Action::Grown: ++rec.grown; break;
      case Action::Seeded: ++rec.seeded; break;
      case Action::Skipped: ++rec.skipped; break;
    }
  };

  if (!pool_) {
    for (const Ray& ray : rays) {
      const auto t0 = Clock::now();
      SearchResult found = search(map_, ray);
      rec.search += seconds_since(t0);
      tally(commit_point(map_, ray, found, &st));
    }
  } else {
    const int threads = pool_->size();
    std::vector<SearchResult> found;
    std::vector<double> busy(static_cast<std::size_t>(threads), 0.0);
    const double slack = map_.config().endpoint_slack;
    for (std::size_t begin = 0; begin < rays.size(); begin += block_) {
      const std::size_t n = std::min(block_, rays.size() - begin);
      found.assign(n, {});
      const std::uint64_t stamp = map_.stamp();
      pool_->run(n, [&](std::size_t i, int worker) {
        const auto t0 = Clock::now();
        found[i] = search(map_, rays[begin + i]);
        busy[static_cast<std::size_t>(worker)] += seconds_since(t0);
      });
      for (std::size_t i = 0; i < n; ++i) {
        const Ray& ray = rays[begin + i];
        if (!map_.region_unchanged(ray.origin, ray.dir, ray.range + slack, ray.endpoint, stamp)) {
          const auto t0 = Clock::now();
          found[i] = search(map_, ray);
          rec.search += seconds_since(t0);
          ++rec.researched;
        }
        tally(commit_point(map_, ray, found[i], &st));
      }
    }
    // Stage time is per thread: the average busy time of the workers.
    double sum = 0.0;
    for (double b : busy) sum += b;
    rec.search += sum / threads;
  }

  const auto t_fin = Clock::now();
  map_.finalize_scan();
  rec.purged_seeds = map_.purge_seeds(scan_index_, map_.config().seed_retention);
  const double fin = seconds_since(t_fin);

  rec.tree_maintenance = map_.tree_seconds() - tree0;
  rec.position_check = st.position_check;
  rec.mesh_update = std::max(0.0, st.mesh_update + fin - rec.tree_maintenance);
  rec.total = seconds_since(t_start);
  if (after_scan_) after_scan_(map_, scan_index_);
  ++scan_index_;
  return rec;
}

}  // namespace planar
