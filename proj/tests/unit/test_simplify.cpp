#include "planar/error.hpp"
#include "planar/simplify.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace planar;

namespace {

// Jittered grid of n x n vertices on z = 0, triangulated in cells.
MeshId grid_mesh(MapState& map, int n, double spacing, std::mt19937_64& rng, bool l_shape = false) {
  std::uniform_real_distribution<double> jit(-0.2 * spacing, 0.2 * spacing);
  const MeshId m = map.create_mesh(PlaneFrame::from_normal(Vec3::Zero(), Vec3::UnitZ()), 0);
  std::vector<ElemId> ids(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ids[i * n + j] = map.add_vertex(m, Vec3(i * spacing + jit(rng), j * spacing + jit(rng), 0));
  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j + 1 < n; ++j) {
      if (l_shape && i >= n / 2 && j >= n / 2) continue;
      map.add_face(m, ids[i * n + j], ids[(i + 1) * n + j], ids[(i + 1) * n + j + 1]);
      map.add_face(m, ids[i * n + j], ids[(i + 1) * n + j + 1], ids[i * n + j + 1]);
    }
  return m;
}

// Independent restatement of the sampling rule.
std::vector<ElemId> sampling_oracle(const PlanarMesh& pm) {
  std::vector<ElemId> order;
  for (ElemId v : pm.vertices.ids())
    if (!pm.vertices[v].edges.empty()) order.push_back(v);
  std::sort(order.begin(), order.end(), [&](ElemId a, ElemId b) {
    const double ra = pm.vertices[a].radius, rb = pm.vertices[b].radius;
    return ra != rb ? ra < rb : a < b;
  });
  std::vector<ElemId> kept;
  for (ElemId v : order) {
    bool covered = false;
    for (ElemId k : kept)
      covered = covered || (pm.vertices[k].pos2 - pm.vertices[v].pos2).norm() < pm.vertices[v].radius;
    if (!covered) kept.push_back(v);
  }
  return kept;
}

}  // namespace

TEST_SUITE("simplify") {
  TEST_CASE("greedy sampling matches the radius-ordered oracle") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> r(0.05, 0.6);
    for (int trial = 0; trial < 10; ++trial) {
      MapState map;
      const MeshId m = grid_mesh(map, 12, 0.1, rng);
      for (ElemId v : map.mesh(m).vertices.ids()) map.set_radius(m, v, r(rng));
      std::vector<ElemId> got = sample_vertices(map.mesh(m));
      std::vector<ElemId> want = sampling_oracle(map.mesh(m));
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      CHECK(got == want);
    }
  }

  TEST_CASE("Delaunay triangles have empty circumcircles") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 10);
    std::vector<Vec2> pts;
    for (int i = 0; i < 300; ++i) pts.emplace_back(u(rng), u(rng));
    const Triangulation2D t = delaunay_2d(pts);
    REQUIRE_FALSE(t.triangles.empty());
    std::set<std::uint32_t> used;
    for (const auto& tri : t.triangles) {
      const Vec2 &a = t.points[tri[0]], &b = t.points[tri[1]], &c = t.points[tri[2]];
      CHECK(orient_2d(a, b, c) > 0);
      // Circumcentre by the perpendicular-bisector solve.
      Eigen::Matrix2d m;
      m.row(0) = 2 * (b - a);
      m.row(1) = 2 * (c - a);
      const Vec2 rhs(b.squaredNorm() - a.squaredNorm(), c.squaredNorm() - a.squaredNorm());
      const Vec2 o = m.inverse() * rhs;
      const double r2 = (a - o).squaredNorm();
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (k == tri[0] || k == tri[1] || k == tri[2]) continue;
        REQUIRE((pts[k] - o).squaredNorm() >= r2 * (1 - 1e-7));
      }
      used.insert(tri.begin(), tri.end());
    }
    CHECK(used.size() == pts.size());
    // Euler on a triangulated convex hull: T = 2n - 2 - h.
    CHECK(t.triangles.size() <= 2 * pts.size() - 5);
  }

  TEST_CASE("cocircular points resolve deterministically") {
    const std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const Triangulation2D a = delaunay_2d(sq);
    const Triangulation2D b = delaunay_2d(sq);
    CHECK(a.triangles.size() == 2);
    CHECK(a.triangles == b.triangles);
    double area = 0;
    for (const auto& t : a.triangles) area += 0.5 * orient_2d(a.points[t[0]], a.points[t[1]], a.points[t[2]]);
    CHECK(area == doctest::Approx(1.0));
  }

  TEST_CASE("collinear or too few points throw") {
    try {
      delaunay_2d({{0, 0}, {1, 1}, {2, 2}, {3, 3}});
      FAIL("expected CollinearInput");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CollinearInput);
    }
    CHECK_THROWS_AS(delaunay_2d({{0, 0}, {1, 0}}), Error);
  }

  TEST_CASE("restore_concavity keeps the notch of an L shape") {
    std::mt19937_64 rng(3);
    MapState map;
    const MeshId m = grid_mesh(map, 11, 0.1, rng, true);
    const PlanarMesh& pm = map.mesh(m);
    for (ElemId v : pm.vertices.ids()) map.set_radius(m, v, 0.25);
    const SimplifiedMesh s = simplify_planar_mesh(pm);
    REQUIRE_FALSE(s.faces.empty());
    CHECK(s.vertices.size() < pm.vertices.size());
    double area = 0;
    for (const auto& f : s.faces) {
      const Vec2 &a = s.vertices[f[0]].pos2, &b = s.vertices[f[1]].pos2, &c = s.vertices[f[2]].pos2;
      area += 0.5 * orient_2d(a, b, c);
      // No kept triangle's centroid falls in the missing quadrant.
      const Vec2 cen = (a + b + c) / 3.0;
      CHECK_FALSE((cen.x() > 0.55 && cen.y() > 0.55));
    }
    CHECK(area < pm.total_area * 1.05);
    for (const auto& v : s.vertices) CHECK(std::abs(v.pos3.z()) < 1e-12);
  }

  TEST_CASE("fallback keeps a mesh that samples too few vertices") {
    std::mt19937_64 rng(4);
    MapState map;
    const MeshId m = grid_mesh(map, 4, 0.1, rng);
    // Huge radii: only one vertex survives sampling.
    for (ElemId v : map.mesh(m).vertices.ids()) map.set_radius(m, v, 1.0);
    CHECK(sample_vertices(map.mesh(m)).size() == 1);
    const SimplifiedMesh s = simplify_planar_mesh(map.mesh(m));
    CHECK(s.faces.size() == map.mesh(m).faces.size());
    CHECK(s.vertices.size() == map.mesh(m).vertices.size());
  }

  TEST_CASE("simplify_map skips faceless meshes unless asked") {
    std::mt19937_64 rng(5);
    MapConfig cfg;
    MapState map(cfg);
    grid_mesh(map, 5, 0.1, rng);
    const MeshId seed = map.create_mesh(0);
    map.add_vertex(seed, Vec3(5, 5, 5));
    CHECK(simplify_map(map).size() == 1);
    map.mutable_config().emit_faceless_seeds = true;
    CHECK(simplify_map(map).size() == 2);
    const TriMesh raw = to_trimesh(map);
    CHECK(raw.faces.size() == map.face_count());
    CHECK(raw.face_group.size() == raw.faces.size());
  }
}
