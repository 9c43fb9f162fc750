#include "planar/bvh.hpp"
#include "planar/error.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <set>

using namespace planar;

namespace {

LeafPayload face(std::uint32_t id) { return {LeafKind::Face, 0, id}; }

Aabb unit_box_at(const Vec3& c, double h = 0.1) { return {c.array() - h, c.array() + h}; }

}  // namespace

TEST_SUITE("bvh") {
  TEST_CASE("insert, find and remove") {
    DynamicBvh t(0.05);
    CHECK(t.empty());
    const NodeId a = t.insert(face(1), unit_box_at({0, 0, 0}));
    const NodeId b = t.insert(face(2), unit_box_at({5, 0, 0}));
    CHECK(t.leaf_count() == 2);
    CHECK(t.node_count() == 3);
    CHECK(t.find(face(1)) == a);
    CHECK(t.find(face(2)) == b);
    CHECK(t.find(face(3)) == kNullNode);
    CHECK(t.fat_bounds(a).contains(unit_box_at({0, 0, 0}).inflated(0.05)));
    CHECK_FALSE(t.validate());

    t.remove(a);
    CHECK(t.leaf_count() == 1);
    CHECK_FALSE(t.contains(a));
    CHECK_FALSE(t.validate());
    t.remove(b);
    CHECK(t.empty());
  }

  TEST_CASE("errors: duplicate payload and unknown leaf") {
    DynamicBvh t;
    const NodeId a = t.insert(face(7), unit_box_at({0, 0, 0}));
    try {
      t.insert(face(7), unit_box_at({1, 0, 0}));
      FAIL("expected DuplicatePayload");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DuplicatePayload);
    }
    t.remove(a);
    try {
      t.remove(a);
      FAIL("expected UnknownLeaf");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownLeaf);
    }
    CHECK_THROWS_AS(t.update(12345, unit_box_at({0, 0, 0})), Error);
  }

  TEST_CASE("update is a no-op inside the fat box") {
    DynamicBvh t(0.1);
    const NodeId a = t.insert(face(1), unit_box_at({0, 0, 0}));
    t.insert(face(2), unit_box_at({3, 0, 0}));
    const Aabb fat = t.fat_bounds(a);
    CHECK_FALSE(t.update(a, unit_box_at({0.05, 0, 0})));
    CHECK(t.fat_bounds(a).min == fat.min);
    CHECK(t.update(a, unit_box_at({1.0, 0, 0})));
    CHECK(t.find(face(1)) == a);  // same id after reinsertion
    CHECK(t.fat_bounds(a).contains(unit_box_at({1.0, 0, 0})));
    CHECK_FALSE(t.validate());
  }

  TEST_CASE("kinds and mesh ids form distinct payload keys") {
    DynamicBvh t;
    t.insert({LeafKind::Face, 1, 5}, unit_box_at({0, 0, 0}));
    t.insert({LeafKind::BoundaryVertex, 1, 5}, unit_box_at({0, 0, 0}));
    t.insert({LeafKind::Face, 2, 5}, unit_box_at({0, 0, 0}));
    CHECK(t.leaf_count() == 3);
    std::set<std::tuple<int, std::uint32_t, std::uint32_t>> seen;
    t.for_each_leaf([&](NodeId, const LeafPayload& p) { seen.insert({int(p.kind), p.mesh, p.element}); });
    CHECK(seen.size() == 3);
  }

  TEST_CASE("randomized history keeps the tree valid and queries exact") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 20);
    DynamicBvh t(0.05);
    std::map<std::uint32_t, std::pair<NodeId, Aabb>> live;
    std::uint32_t next = 0;
    for (int step = 0; step < 3000; ++step) {
      const int op = static_cast<int>(rng() % 3);
      if (op == 0 || live.size() < 10) {
        const Aabb b = unit_box_at({u(rng), u(rng), u(rng)}, 0.05 + 0.02 * u(rng));
        live[next] = {t.insert(face(next), b), b};
        ++next;
      } else if (op == 1) {
        auto it = std::next(live.begin(), static_cast<long>(rng() % live.size()));
        t.remove(it->second.first);
        live.erase(it);
      } else {
        auto it = std::next(live.begin(), static_cast<long>(rng() % live.size()));
        const Aabb b = unit_box_at(it->second.second.center() + Vec3(u(rng), u(rng), u(rng)) * 0.01, 0.1);
        t.update(it->second.first, b);
        it->second.second = b;
      }
      if (step % 50 == 0) REQUIRE_FALSE(t.validate());
      REQUIRE(t.leaf_count() == live.size());
    }
    REQUIRE_FALSE(t.validate());
    for (int q = 0; q < 200; ++q) {
      const Vec3 p(u(rng), u(rng), u(rng));
      std::set<std::uint32_t> got, want;
      t.query_aabb(unit_box_at(p, 1.0), [&](NodeId leaf, const LeafPayload& pl) {
        if (live.at(pl.element).second.overlaps(unit_box_at(p, 1.0))) got.insert(pl.element);
        CHECK(t.fat_bounds(leaf).overlaps(unit_box_at(p, 1.0)));
      });
      for (const auto& [id, e] : live)
        if (e.second.overlaps(unit_box_at(p, 1.0))) want.insert(id);
      CHECK(got == want);
    }
  }

  TEST_CASE("localized queries visit fewer nodes than the tree holds") {
    DynamicBvh t(0.05);
    std::vector<Aabb> boxes;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j)
        for (int k = 0; k < 5; ++k) {
          boxes.push_back(unit_box_at({i * 2.0, j * 2.0, k * 2.0}));
          t.insert(face(static_cast<std::uint32_t>(boxes.size() - 1)), boxes.back());
        }
    REQUIRE(t.leaf_count() == 2000);
    QueryStats st;
    const auto hits = t.query_point(
        Vec3(10, 10, 4), [&](const LeafPayload& p) { return boxes[p.element].contains(Vec3(10, 10, 4)); }, &st);
    CHECK(hits.size() == 1);
    CHECK(st.nodes_visited < t.node_count() / 10);

    QueryStats rs;
    const Vec3 o(-1, 10, 4), d(1, 0, 0);
    const auto ray_hits = t.query_ray(
        o, d, 1.5,
        [&](const LeafPayload& p) -> std::optional<double> {
          if (ray_aabb_intersect(o, d.cwiseInverse(), 1.5, boxes[p.element])) return 1.0;
          return std::nullopt;
        },
        &rs);
    CHECK(ray_hits.size() == 1);
    CHECK(rs.nodes_visited < t.node_count() / 10);
    CHECK(t.height() < 30);
  }

  TEST_CASE("surface-area heuristic keeps clustered inputs compact") {
    // Two far-apart clusters: the root's children should separate them.
    DynamicBvh t(0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (std::uint32_t i = 0; i < 200; ++i) {
      const Vec3 c = (i % 2 ? Vec3(100, 0, 0) : Vec3(0, 0, 0)) + Vec3(u(rng), u(rng), u(rng));
      t.insert(face(i), unit_box_at(c, 0.01));
    }
    const BvhNode& root = t.node(t.root());
    const Aabb& l = t.node(root.child1).bounds;
    const Aabb& r = t.node(root.child2).bounds;
    CHECK_FALSE(l.overlaps(r));
    CHECK(t.internal_surface_area() > 0.0);
  }
}
