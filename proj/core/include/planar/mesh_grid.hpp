#pragma once

#include "planar/geometry.hpp"
#include "planar/slot_store.hpp"

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace planar {

/// Uniform hash grid over the 2D frame of one planar-mesh. Vertices live in a
/// single cell; edges and faces are registered in every cell their bounding
/// box touches, so range queries may report them more than once.
class MeshGrid {
 public:
  explicit MeshGrid(double cell = 0.25) : cell_(cell), inv_(1.0 / cell) {}

  double cell() const { return cell_; }
  void clear() { cells_.clear(); }
  bool empty() const { return cells_.empty(); }

  void insert_vertex(ElemId id, const Vec2& p) { cells_[key(index(p))].verts.push_back(id); }
  void remove_vertex(ElemId id, const Vec2& p) { erase_from(key(index(p)), &Cell::verts, id); }

  void insert_edge(ElemId id, const Vec2& a, const Vec2& b) {
    over_box(a.cwiseMin(b), a.cwiseMax(b), [&](std::uint64_t k) { cells_[k].edges.push_back(id); });
  }
  void remove_edge(ElemId id, const Vec2& a, const Vec2& b) {
    over_box(a.cwiseMin(b), a.cwiseMax(b), [&](std::uint64_t k) { erase_from(k, &Cell::edges, id); });
  }

  void insert_face(ElemId id, const Vec2& a, const Vec2& b, const Vec2& c) {
    over_box(a.cwiseMin(b).cwiseMin(c), a.cwiseMax(b).cwiseMax(c),
             [&](std::uint64_t k) { cells_[k].faces.push_back(id); });
  }
  void remove_face(ElemId id, const Vec2& a, const Vec2& b, const Vec2& c) {
    over_box(a.cwiseMin(b).cwiseMin(c), a.cwiseMax(b).cwiseMax(c),
             [&](std::uint64_t k) { erase_from(k, &Cell::faces, id); });
  }

  template <class Fn>
  void vertices_in(const Vec2& lo, const Vec2& hi, Fn&& fn) const {
    visit(lo, hi, [&](const Cell& c) {
      for (ElemId id : c.verts) fn(id);
    });
  }
  template <class Fn>
  void edges_in(const Vec2& lo, const Vec2& hi, Fn&& fn) const {
    visit(lo, hi, [&](const Cell& c) {
      for (ElemId id : c.edges) fn(id);
    });
  }
  template <class Fn>
  void faces_at(const Vec2& p, Fn&& fn) const {
    auto it = cells_.find(key(index(p)));
    if (it == cells_.end()) return;
    for (ElemId id : it->second.faces) fn(id);
  }

  /// Vertices in the square ring of cells at Chebyshev distance k from the
  /// cell containing p.
  template <class Fn>
  void vertices_in_ring(const Vec2& p, int k, Fn&& fn) const {
    const auto [cx, cy] = index(p);
    auto cell_fn = [&](std::int64_t x, std::int64_t y) {
      auto it = cells_.find(key({x, y}));
      if (it == cells_.end()) return;
      for (ElemId id : it->second.verts) fn(id);
    };
    if (k == 0) {
      cell_fn(cx, cy);
      return;
    }
    for (std::int64_t x = cx - k; x <= cx + k; ++x) {
      cell_fn(x, cy - k);
      cell_fn(x, cy + k);
    }
    for (std::int64_t y = cy - k + 1; y <= cy + k - 1; ++y) {
      cell_fn(cx - k, y);
      cell_fn(cx + k, y);
    }
  }

 private:
  struct Cell {
    std::vector<ElemId> verts, edges, faces;
  };
  struct Index {
    std::int64_t x, y;
  };

  Index index(const Vec2& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() * inv_)), static_cast<std::int64_t>(std::floor(p.y() * inv_))};
  }
  static std::uint64_t key(Index i) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i.x)) << 32) |
           static_cast<std::uint32_t>(i.y);
  }

  template <class Fn>
  void over_box(const Vec2& lo, const Vec2& hi, Fn&& fn) {
    const Index a = index(lo), b = index(hi);
    for (std::int64_t x = a.x; x <= b.x; ++x) {
      for (std::int64_t y = a.y; y <= b.y; ++y) fn(key({x, y}));
    }
  }

  template <class Fn>
  void visit(const Vec2& lo, const Vec2& hi, Fn&& fn) const {
    const Index a = index(lo), b = index(hi);
    for (std::int64_t x = a.x; x <= b.x; ++x) {
      for (std::int64_t y = a.y; y <= b.y; ++y) {
        auto it = cells_.find(key({x, y}));
        if (it != cells_.end()) fn(it->second);
      }
    }
  }

  void erase_from(std::uint64_t k, std::vector<ElemId> Cell::*list, ElemId id) {
    auto it = cells_.find(k);
    if (it == cells_.end()) return;
    auto& v = it->second.*list;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == id) {
        v[i] = v.back();
        v.pop_back();
        break;
      }
    }
    const Cell& c = it->second;
    if (c.verts.empty() && c.edges.empty() && c.faces.empty()) cells_.erase(it);
  }

  double cell_;
  double inv_;
  std::unordered_map<std::uint64_t, Cell> cells_;
};

}  // namespace planar
