#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bitstar {

/// Binary min-heap over dense integer handles with O(log n) key update and
/// removal by handle. `Key` must be totally ordered by operator<.
template <class Key>
class IndexedHeap {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

  bool contains(std::size_t handle) const {
    return handle < pos_.size() && pos_[handle] != npos;
  }

  const Key& top_key() const { return keys_[heap_.front()]; }
  std::size_t top() const { return heap_.front(); }
  const Key& key(std::size_t handle) const { return keys_[handle]; }

  void push(std::size_t handle, Key key) {
    if (contains(handle)) throw std::logic_error("IndexedHeap::push: handle already queued");
    if (handle >= pos_.size()) {
      pos_.resize(handle + 1, npos);
      keys_.resize(handle + 1);
    }
    keys_[handle] = std::move(key);
    pos_[handle] = heap_.size();
    heap_.push_back(handle);
    sift_up(heap_.size() - 1);
  }

  std::size_t pop() {
    const std::size_t handle = heap_.front();
    erase(handle);
    return handle;
  }

  void erase(std::size_t handle) {
    const std::size_t at = pos_[handle];
    const std::size_t last = heap_.size() - 1;
    if (at != last) swap_at(at, last);
    heap_.pop_back();
    pos_[handle] = npos;
    if (at < heap_.size()) {
      const std::size_t moved = heap_[at];
      sift_up(at);
      sift_down(pos_[moved]);
    }
  }

  void update(std::size_t handle, Key key) {
    const bool decreased = key < keys_[handle];
    keys_[handle] = std::move(key);
    if (decreased) {
      sift_up(pos_[handle]);
    } else {
      sift_down(pos_[handle]);
    }
  }

  void clear() {
    for (std::size_t h : heap_) pos_[h] = npos;
    heap_.clear();
  }

  /// Handles currently queued, in heap order.
  const std::vector<std::size_t>& handles() const { return heap_; }

 private:
  bool less(std::size_t a, std::size_t b) const { return keys_[heap_[a]] < keys_[heap_[b]]; }

  void swap_at(std::size_t a, std::size_t b) {
    std::swap(heap_[a], heap_[b]);
    pos_[heap_[a]] = a;
    pos_[heap_[b]] = b;
  }

  void sift_up(std::size_t i) {
    while (i > 0) {
      const std::size_t parent = (i - 1) / 2;
      if (!less(i, parent)) break;
      swap_at(i, parent);
      i = parent;
    }
  }

  void sift_down(std::size_t i) {
    const std::size_t n = heap_.size();
    for (;;) {
      const std::size_t l = 2 * i + 1;
      const std::size_t r = l + 1;
      std::size_t best = i;
      if (l < n && less(l, best)) best = l;
      if (r < n && less(r, best)) best = r;
      if (best == i) return;
      swap_at(i, best);
      i = best;
    }
  }

  std::vector<std::size_t> heap_;
  std::vector<std::size_t> pos_;
  std::vector<Key> keys_;
};

}  // namespace bitstar
