#pragma once

#include "planar/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace planar {

enum class LeafKind : std::uint8_t { Face = 0, BoundaryVertex = 1, Mesh = 2 };

/// What a leaf refers to: an element (face or boundary vertex) of one planar-mesh.
struct LeafPayload {
  LeafKind kind = LeafKind::Face;
  std::uint32_t mesh = 0;
  std::uint32_t element = 0;

  friend bool operator==(const LeafPayload&, const LeafPayload&) = default;
};

using NodeId = std::int32_t;
inline constexpr NodeId kNullNode = -1;

struct BvhNode {
  Aabb bounds;  // fat for leaves
  NodeId parent = kNullNode;
  NodeId child1 = kNullNode;
  NodeId child2 = kNullNode;
  int height = 0;  // 0 for leaves, -1 for free slots
  LeafPayload payload{};

  bool is_leaf() const { return child1 == kNullNode; }
};

struct QueryStats {
  std::size_t nodes_visited = 0;
};

struct RayHit {
  LeafPayload payload;
  NodeId leaf = kNullNode;
  double t = 0.0;
};

/// Incrementally updatable AABB tree. Leaves hold fat boxes (tight box inflated
/// by a margin); insertion picks the sibling with minimal surface-area cost by
/// branch-and-bound and rebalances the ancestor path with local rotations.
///
/// The element geometry is not stored: queries resolve exact hits through a
/// caller-supplied predicate, so one implementation serves faces (ray queries)
/// and radius spheres (reverse point queries).
///
/// Const member functions may run concurrently with each other; mutations need
/// exclusive access (MapState serializes them).
class DynamicBvh {
 public:
  explicit DynamicBvh(double margin = 0.05);

  /// Throws DuplicatePayload if the payload is already present.
  NodeId insert(const LeafPayload& payload, const Aabb& tight);
  /// Throws UnknownLeaf.
  void remove(NodeId leaf);
  /// No-op while the tight box stays inside the fat box; otherwise the leaf is
  /// reinserted under the same id. Returns true when it was reinserted.
  bool update(NodeId leaf, const Aabb& tight);

  NodeId find(const LeafPayload& payload) const;
  bool contains(NodeId leaf) const;
  const LeafPayload& payload(NodeId leaf) const { return nodes_[leaf].payload; }
  const Aabb& fat_bounds(NodeId leaf) const { return nodes_[leaf].bounds; }
  const BvhNode& node(NodeId id) const { return nodes_[id]; }
  NodeId root() const { return root_; }
  double margin() const { return margin_; }

  std::size_t leaf_count() const { return lookup_.size(); }
  std::size_t node_count() const { return nodes_.size() - free_count_; }
  bool empty() const { return root_ == kNullNode; }
  int height() const { return root_ == kNullNode ? 0 : nodes_[root_].height; }
  /// Sum of internal node surface areas (the quantity insertion minimizes).
  double internal_surface_area() const;

  void clear();

  /// Segment origin + t*dir for t in [0, tmax]. hit_test(payload) returns the
  /// exact hit distance or nullopt. The traversal stack is per thread, so
  /// hit_test must not start another ray or point query.
  template <class HitTest>
  std::vector<RayHit> query_ray(const Vec3& origin, const Vec3& dir, double tmax, HitTest&& hit_test,
                                QueryStats* stats = nullptr) const;

  template <class HitTest>
  std::vector<RayHit> query_ray(const Ray& ray, double slack, HitTest&& hit_test,
                                QueryStats* stats = nullptr) const {
    return query_ray(ray.origin, ray.dir, ray.range + slack, std::forward<HitTest>(hit_test), stats);
  }

  /// Leaves whose fat box contains p and whose containment test accepts p.
  template <class Contains>
  std::vector<LeafPayload> query_point(const Vec3& p, Contains&& contains,
                                       QueryStats* stats = nullptr) const;

  /// Calls fn(leaf, payload) for every leaf whose fat box overlaps box.
  template <class Fn>
  void query_aabb(const Aabb& box, Fn&& fn) const;

  template <class Fn>
  void for_each_leaf(Fn&& fn) const {
    for (const auto& [key, id] : lookup_) fn(id, nodes_[id].payload);
  }

  /// Structural self-check. Returns the first violation found, or nullopt.
  std::optional<std::string> validate() const;

 private:
  NodeId allocate();
  void release(NodeId id);
  void insert_leaf(NodeId leaf);
  void remove_leaf(NodeId leaf);
  NodeId find_best_sibling(const Aabb& box) const;
  void refit_upward(NodeId start);
  void rotate(NodeId a);
  void recompute(NodeId id);

  static std::uint64_t key_of(const LeafPayload& p) {
    return (static_cast<std::uint64_t>(p.kind) << 62) |
           (static_cast<std::uint64_t>(p.mesh & 0x7fffffffu) << 31) |
           static_cast<std::uint64_t>(p.element & 0x7fffffffu);
  }

  std::vector<BvhNode> nodes_;
  NodeId free_list_ = kNullNode;
  std::size_t free_count_ = 0;
  NodeId root_ = kNullNode;
  double margin_;
  std::unordered_map<std::uint64_t, NodeId> lookup_;
};

template <class HitTest>
std::vector<RayHit> DynamicBvh::query_ray(const Vec3& origin, const Vec3& dir, double tmax,
                                          HitTest&& hit_test, QueryStats* stats) const {
  std::vector<RayHit> hits;
  if (root_ == kNullNode) return hits;
  const Vec3 inv = dir.cwiseInverse();
  thread_local std::vector<NodeId> stack;
  stack.clear();
  stack.push_back(root_);
  std::size_t visited = 0;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    ++visited;
    const BvhNode& n = nodes_[id];
    if (!ray_aabb_intersect(origin, inv, tmax, n.bounds)) continue;
    if (n.is_leaf()) {
      if (std::optional<double> t = hit_test(n.payload)) hits.push_back({n.payload, id, *t});
    } else {
      stack.push_back(n.child1);
      stack.push_back(n.child2);
    }
  }
  if (stats) stats->nodes_visited += visited;
  return hits;
}

template <class Contains>
std::vector<LeafPayload> DynamicBvh::query_point(const Vec3& p, Contains&& contains,
                                                 QueryStats* stats) const {
  std::vector<LeafPayload> out;
  if (root_ == kNullNode) return out;
  thread_local std::vector<NodeId> stack;
  stack.clear();
  stack.push_back(root_);
  std::size_t visited = 0;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    ++visited;
    const BvhNode& n = nodes_[id];
    if (!n.bounds.contains(p)) continue;
    if (n.is_leaf()) {
      if (contains(n.payload)) out.push_back(n.payload);
    } else {
      stack.push_back(n.child1);
      stack.push_back(n.child2);
    }
  }
  if (stats) stats->nodes_visited += visited;
  return out;
}

template <class Fn>
void DynamicBvh::query_aabb(const Aabb& box, Fn&& fn) const {
  if (root_ == kNullNode) return;
  std::vector<NodeId> stack;
  stack.reserve(64);
  stack.push_back(root_);
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const BvhNode& n = nodes_[id];
    if (!n.bounds.overlaps(box)) continue;
    if (n.is_leaf()) {
      fn(id, n.payload);
    } else {
      stack.push_back(n.child1);
      stack.push_back(n.child2);
    }
  }
}

}  // namespace planar
