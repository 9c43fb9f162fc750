#pragma once

#include "planar/error.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace planar {

using ElemId = std::uint32_t;
inline constexpr ElemId kNoElem = std::numeric_limits<ElemId>::max();

/// Id-indexed storage with stable ids. Freed ids are reused last-in first-out,
/// which keeps id assignment a pure function of the operation sequence.
template <class T>
class SlotStore {
 public:
  ElemId add(T value) {
    ElemId id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
      items_[id] = std::move(value);
      alive_[id] = 1;
    } else {
      id = static_cast<ElemId>(items_.size());
      items_.push_back(std::move(value));
      alive_.push_back(1);
    }
    ++live_;
    return id;
  }

  /// Places a value at a given id (used when restoring a serialized map).
  void emplace_at(ElemId id, T value) {
    if (id >= items_.size()) {
      items_.resize(id + 1);
      alive_.resize(id + 1, 0);
    }
    if (alive_[id]) throw Error(ErrorCode::InvalidArgument, "slot " + std::to_string(id) + " occupied");
    items_[id] = std::move(value);
    alive_[id] = 1;
    ++live_;
  }

  /// Rebuilds the free list after a series of emplace_at calls.
  void rebuild_free_list() {
    free_.clear();
    for (std::size_t i = items_.size(); i-- > 0;) {
      if (!alive_[i]) free_.push_back(static_cast<ElemId>(i));
    }
  }

  void erase(ElemId id) {
    if (!contains(id)) throw Error(ErrorCode::UnknownElement, "id " + std::to_string(id));
    items_[id] = T{};
    alive_[id] = 0;
    free_.push_back(id);
    --live_;
  }

  bool contains(ElemId id) const { return id < items_.size() && alive_[id]; }

  T& operator[](ElemId id) { return items_[id]; }
  const T& operator[](ElemId id) const { return items_[id]; }

  T& at(ElemId id) {
    if (!contains(id)) throw Error(ErrorCode::UnknownElement, "id " + std::to_string(id));
    return items_[id];
  }
  const T& at(ElemId id) const {
    if (!contains(id)) throw Error(ErrorCode::UnknownElement, "id " + std::to_string(id));
    return items_[id];
  }

  std::size_t size() const { return live_; }
  bool empty() const { return live_ == 0; }
  std::size_t capacity() const { return items_.size(); }

  void clear() {
    items_.clear();
    alive_.clear();
    free_.clear();
    live_ = 0;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (alive_[i]) fn(static_cast<ElemId>(i), items_[i]);
    }
  }
  template <class Fn>
  void for_each(Fn&& fn) {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (alive_[i]) fn(static_cast<ElemId>(i), items_[i]);
    }
  }

  std::vector<ElemId> ids() const {
    std::vector<ElemId> out;
    out.reserve(live_);
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (alive_[i]) out.push_back(static_cast<ElemId>(i));
    }
    return out;
  }

 private:
  std::vector<T> items_;
  std::vector<std::uint8_t> alive_;
  std::vector<ElemId> free_;
  std::size_t live_ = 0;
};

}  // namespace planar
