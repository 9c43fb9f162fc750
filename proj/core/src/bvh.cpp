#include "planar/bvh.hpp"

#include "planar/error.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

namespace planar {

DynamicBvh::DynamicBvh(double margin) : margin_(margin) {}

void DynamicBvh::clear() {
  nodes_.clear();
  free_list_ = kNullNode;
  free_count_ = 0;
  root_ = kNullNode;
  lookup_.clear();
}

NodeId DynamicBvh::allocate() {
  if (free_list_ != kNullNode) {
    const NodeId id = free_list_;
    free_list_ = nodes_[id].parent;
    --free_count_;
    nodes_[id] = BvhNode{};
    return id;
  }
  nodes_.emplace_back();
  return static_cast<NodeId>(nodes_.size() - 1);
}

void DynamicBvh::release(NodeId id) {
  BvhNode& n = nodes_[id];
  n = BvhNode{};
  n.height = -1;
  n.parent = free_list_;
  free_list_ = id;
  ++free_count_;
}

bool DynamicBvh::contains(NodeId leaf) const {
  if (leaf < 0 || static_cast<std::size_t>(leaf) >= nodes_.size()) return false;
  const BvhNode& n = nodes_[leaf];
  if (n.height != 0 || !n.is_leaf()) return false;
  auto it = lookup_.find(key_of(n.payload));
  return it != lookup_.end() && it->second == leaf;
}

NodeId DynamicBvh::find(const LeafPayload& payload) const {
  auto it = lookup_.find(key_of(payload));
  return it == lookup_.end() ? kNullNode : it->second;
}

NodeId DynamicBvh::insert(const LeafPayload& payload, const Aabb& tight) {
  const std::uint64_t key = key_of(payload);
  if (lookup_.count(key)) {
    throw Error(ErrorCode::DuplicatePayload, "payload already present in tree");
  }
  const NodeId leaf = allocate();
  BvhNode& n = nodes_[leaf];
  n.bounds = tight.inflated(margin_);
  n.payload = payload;
  n.height = 0;
  insert_leaf(leaf);
  lookup_.emplace(key, leaf);
  return leaf;
}

void DynamicBvh::remove(NodeId leaf) {
  if (!contains(leaf)) throw Error(ErrorCode::UnknownLeaf, "leaf " + std::to_string(leaf));
  lookup_.erase(key_of(nodes_[leaf].payload));
  remove_leaf(leaf);
  release(leaf);
}

bool DynamicBvh::update(NodeId leaf, const Aabb& tight) {
  if (!contains(leaf)) throw Error(ErrorCode::UnknownLeaf, "leaf " + std::to_string(leaf));
  if (nodes_[leaf].bounds.contains(tight)) return false;
  remove_leaf(leaf);
  nodes_[leaf].bounds = tight.inflated(margin_);
  insert_leaf(leaf);
  return true;
}

NodeId DynamicBvh::find_best_sibling(const Aabb& box) const {
  const double box_area = aabb_surface_area(box);

  struct Candidate {
    double inherited;
    NodeId node;
    bool operator>(const Candidate& o) const { return inherited > o.inherited; }
  };
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> open;

  NodeId best = root_;
  double best_cost = aabb_surface_area(aabb_union(nodes_[root_].bounds, box));
  open.push({0.0, root_});

  while (!open.empty()) {
    const Candidate c = open.top();
    open.pop();
    // Every remaining candidate has a lower bound at least this large.
    if (c.inherited + box_area >= best_cost) break;
    const BvhNode& n = nodes_[c.node];
    const double direct = aabb_surface_area(aabb_union(n.bounds, box));
    const double cost = direct + c.inherited;
    if (cost < best_cost) {
      best_cost = cost;
      best = c.node;
    }
    if (!n.is_leaf()) {
      const double inherited = c.inherited + direct - aabb_surface_area(n.bounds);
      if (inherited + box_area < best_cost) {
        open.push({inherited, n.child1});
        open.push({inherited, n.child2});
      }
    }
  }
  return best;
}

void DynamicBvh::insert_leaf(NodeId leaf) {
  if (root_ == kNullNode) {
    root_ = leaf;
    nodes_[leaf].parent = kNullNode;
    return;
  }
  const NodeId sibling = find_best_sibling(nodes_[leaf].bounds);
  const NodeId old_parent = nodes_[sibling].parent;
  const NodeId parent = allocate();
  {
    BvhNode& p = nodes_[parent];
    p.parent = old_parent;
    p.child1 = sibling;
    p.child2 = leaf;
    p.bounds = aabb_union(nodes_[sibling].bounds, nodes_[leaf].bounds);
    p.height = nodes_[sibling].height + 1;
  }
  if (old_parent != kNullNode) {
    BvhNode& op = nodes_[old_parent];
    if (op.child1 == sibling) {
      op.child1 = parent;
    } else {
      op.child2 = parent;
    }
  } else {
    root_ = parent;
  }
  nodes_[sibling].parent = parent;
  nodes_[leaf].parent = parent;
  refit_upward(parent);
}

void DynamicBvh::remove_leaf(NodeId leaf) {
  if (leaf == root_) {
    root_ = kNullNode;
    return;
  }
  const NodeId parent = nodes_[leaf].parent;
  const NodeId grand = nodes_[parent].parent;
  const NodeId sibling = nodes_[parent].child1 == leaf ? nodes_[parent].child2 : nodes_[parent].child1;
  if (grand != kNullNode) {
    BvhNode& g = nodes_[grand];
    if (g.child1 == parent) {
      g.child1 = sibling;
    } else {
      g.child2 = sibling;
    }
    nodes_[sibling].parent = grand;
    release(parent);
    refit_upward(grand);
  } else {
    root_ = sibling;
    nodes_[sibling].parent = kNullNode;
    release(parent);
  }
  nodes_[leaf].parent = kNullNode;
}

void DynamicBvh::recompute(NodeId id) {
  BvhNode& n = nodes_[id];
  const BvhNode& c1 = nodes_[n.child1];
  const BvhNode& c2 = nodes_[n.child2];
  n.bounds = aabb_union(c1.bounds, c2.bounds);
  n.height = 1 + std::max(c1.height, c2.height);
}

void DynamicBvh::refit_upward(NodeId start) {
  for (NodeId id = start; id != kNullNode; id = nodes_[id].parent) {
    recompute(id);
    rotate(id);
  }
}

// Swaps a child of `a` with a grandchild on the other side when that shrinks
// the surface area of the intermediate node. The bounds of `a` do not change.
void DynamicBvh::rotate(NodeId a) {
  const BvhNode& na = nodes_[a];
  if (na.is_leaf() || na.height < 2) return;
  const NodeId b = na.child1;
  const NodeId c = na.child2;

  enum class Rot { None, CwithD, CwithE, BwithF, BwithG };
  Rot best = Rot::None;
  double best_delta = 0.0;

  const BvhNode& nb = nodes_[b];
  const BvhNode& nc = nodes_[c];
  if (!nb.is_leaf()) {
    const double base = aabb_surface_area(nb.bounds);
    const double cd = aabb_surface_area(aabb_union(nc.bounds, nodes_[nb.child2].bounds)) - base;
    const double ce = aabb_surface_area(aabb_union(nc.bounds, nodes_[nb.child1].bounds)) - base;
    if (cd < best_delta) { best_delta = cd; best = Rot::CwithD; }
    if (ce < best_delta) { best_delta = ce; best = Rot::CwithE; }
  }
  if (!nc.is_leaf()) {
    const double base = aabb_surface_area(nc.bounds);
    const double bf = aabb_surface_area(aabb_union(nb.bounds, nodes_[nc.child2].bounds)) - base;
    const double bg = aabb_surface_area(aabb_union(nb.bounds, nodes_[nc.child1].bounds)) - base;
    if (bf < best_delta) { best_delta = bf; best = Rot::BwithF; }
    if (bg < best_delta) { best_delta = bg; best = Rot::BwithG; }
  }
  // Ignore rotations that only shave off rounding noise.
  if (best == Rot::None || best_delta > -1e-12 * (1.0 + aabb_surface_area(na.bounds))) return;

  auto swap_child_with_grandchild = [&](NodeId child, NodeId inner, bool first_grandchild) {
    BvhNode& ni = nodes_[inner];
    const NodeId g = first_grandchild ? ni.child1 : ni.child2;
    // `child` goes under `inner`, `g` moves up to `a`.
    if (first_grandchild) {
      ni.child1 = child;
    } else {
      ni.child2 = child;
    }
    BvhNode& top = nodes_[a];
    if (top.child1 == child) {
      top.child1 = g;
    } else {
      top.child2 = g;
    }
    nodes_[child].parent = inner;
    nodes_[g].parent = a;
    recompute(inner);
    recompute(a);
  };

  switch (best) {
    case Rot::CwithD: swap_child_with_grandchild(c, b, true); break;
    case Rot::CwithE: swap_child_with_grandchild(c, b, false); break;
    case Rot::BwithF: swap_child_with_grandchild(b, c, true); break;
    case Rot::BwithG: swap_child_with_grandchild(b, c, false); break;
    case Rot::None: break;
  }
}

double DynamicBvh::internal_surface_area() const {
  double total = 0.0;
  for (const BvhNode& n : nodes_) {
    if (n.height > 0) total += aabb_surface_area(n.bounds);
  }
  return total;
}

std::optional<std::string> DynamicBvh::validate() const {
  std::ostringstream err;
  if (root_ == kNullNode) {
    if (!lookup_.empty()) return "empty tree but lookup has " + std::to_string(lookup_.size()) + " leaves";
    return std::nullopt;
  }
  if (nodes_[root_].parent != kNullNode) return "root has a parent";

  std::size_t reached = 0;
  std::size_t leaves = 0;
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) return "node id out of range";
    const BvhNode& n = nodes_[id];
    if (n.height < 0) {
      err << "free node " << id << " reachable from root";
      return err.str();
    }
    if (++reached > nodes_.size()) return "cycle detected";
    if (n.is_leaf()) {
      if (n.child2 != kNullNode || n.height != 0) {
        err << "leaf " << id << " malformed";
        return err.str();
      }
      ++leaves;
      auto it = lookup_.find(key_of(n.payload));
      if (it == lookup_.end() || it->second != id) {
        err << "leaf " << id << " missing from payload lookup";
        return err.str();
      }
      continue;
    }
    if (n.child2 == kNullNode) {
      err << "internal node " << id << " has one child";
      return err.str();
    }
    for (NodeId c : {n.child1, n.child2}) {
      if (nodes_[c].parent != id) {
        err << "child " << c << " does not point back to parent " << id;
        return err.str();
      }
      if (!n.bounds.contains(nodes_[c].bounds)) {
        err << "node " << id << " bounds do not contain child " << c;
        return err.str();
      }
      stack.push_back(c);
    }
    const int h = 1 + std::max(nodes_[n.child1].height, nodes_[n.child2].height);
    if (h != n.height) {
      err << "node " << id << " height " << n.height << " expected " << h;
      return err.str();
    }
  }
  if (leaves != lookup_.size()) {
    err << "reachable leaves " << leaves << " != registered " << lookup_.size();
    return err.str();
  }
  if (reached != node_count()) {
    err << "reachable nodes " << reached << " != allocated " << node_count();
    return err.str();
  }
  return std::nullopt;
}

}  // namespace planar
