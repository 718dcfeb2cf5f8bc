#pragma once

// k-d tree over identified states. Entries inserted since the last bulk build
// live in a pending list that is scanned linearly; removal leaves a tombstone
// until half the slots are dead, at which point the tree is rebuilt.

#include "bitstar/core/geometry.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace bitstar {

class SpatialIndex {
 public:
  explicit SpatialIndex(std::size_t dimension) : n_(dimension) {
    if (n_ == 0) throw std::invalid_argument("SpatialIndex: dimension must be >= 1");
  }

  std::size_t dimension() const { return n_; }
  std::size_t size() const { return ids_.size() - dead_; }
  bool empty() const { return size() == 0; }
  bool contains(std::size_t id) const { return slot_of_.count(id) != 0; }

  void insert(std::size_t id, const StateVec& x) {
    detail::require_dimension(x, n_, "SpatialIndex::insert");
    if (contains(id)) throw std::invalid_argument("SpatialIndex::insert: duplicate id");
    const std::size_t slot = ids_.size();
    coords_.insert(coords_.end(), x.data(), x.data() + n_);
    ids_.push_back(id);
    seq_.push_back(next_seq_++);
    alive_.push_back(1);
    slot_of_.emplace(id, slot);
    if (slot + 1 - built_ > std::max<std::size_t>(kMinPending, built_ / 8)) rebuild();
  }

  bool erase(std::size_t id) {
    auto it = slot_of_.find(id);
    if (it == slot_of_.end()) return false;
    alive_[it->second] = 0;
    slot_of_.erase(it);
    ++dead_;
    if (dead_ * 2 > ids_.size()) rebuild();
    return true;
  }

  void clear() {
    coords_.clear();
    ids_.clear();
    seq_.clear();
    alive_.clear();
    slot_of_.clear();
    perm_.clear();
    split_dim_.clear();
    built_ = 0;
    dead_ = 0;
  }

  /// Drops tombstones and bulk-builds the tree over every live entry.
  void rebuild() {
    if (dead_ > 0) compact();
    const std::size_t count = ids_.size();
    perm_.resize(count);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    split_dim_.assign(count, 0);
    build(0, count);
    built_ = count;
  }

  /// Appends to `out` the ids of live entries within distance r of q
  /// (inclusive) that satisfy `keep(id)`.
  template <class Keep>
  void radius(const StateVec& q, double r, Keep&& keep, std::vector<std::size_t>& out) const {
    detail::require_dimension(q, n_, "SpatialIndex::radius");
    const double r2 = r * r;
    if (built_ > 0) radius_node(q.data(), r2, 0, built_, keep, out);
    for (std::size_t slot = built_; slot < ids_.size(); ++slot) {
      if (alive_[slot] && dist2(q.data(), slot) <= r2 && keep(ids_[slot])) out.push_back(ids_[slot]);
    }
  }

  std::vector<std::size_t> radius(const StateVec& q, double r) const {
    std::vector<std::size_t> out;
    radius(q, r, [](std::size_t) { return true; }, out);
    return out;
  }

  /// Appends the k closest accepted entries, nearest first; equal distances
  /// are ordered by insertion.
  template <class Keep>
  void nearest_k(const StateVec& q, std::size_t k, Keep&& keep, std::vector<std::size_t>& out) const {
    detail::require_dimension(q, n_, "SpatialIndex::nearest_k");
    if (k == 0) return;
    Heap heap;
    if (built_ > 0) knn_node(q.data(), k, 0, built_, keep, heap);
    for (std::size_t slot = built_; slot < ids_.size(); ++slot) {
      if (alive_[slot] && keep(ids_[slot])) offer(heap, k, {dist2(q.data(), slot), seq_[slot], slot});
    }
    std::vector<Candidate> sorted;
    sorted.reserve(heap.size());
    while (!heap.empty()) {
      sorted.push_back(heap.top());
      heap.pop();
    }
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) out.push_back(ids_[it->slot]);
  }

  std::vector<std::size_t> nearest_k(const StateVec& q, std::size_t k) const {
    std::vector<std::size_t> out;
    nearest_k(q, k, [](std::size_t) { return true; }, out);
    return out;
  }

  std::optional<std::size_t> nearest(const StateVec& q) const {
    std::vector<std::size_t> out;
    nearest_k(q, 1, [](std::size_t) { return true; }, out);
    if (out.empty()) return std::nullopt;
    return out.front();
  }

 private:
  static constexpr std::size_t kLeaf = 8;
  static constexpr std::size_t kMinPending = 64;

  struct Candidate {
    double d2;
    std::uint64_t seq;
    std::size_t slot;
    bool operator<(const Candidate& o) const { return d2 != o.d2 ? d2 < o.d2 : seq < o.seq; }
  };
  using Heap = std::priority_queue<Candidate>;

  double coord(std::size_t slot, std::size_t d) const { return coords_[slot * n_ + d]; }

  double dist2(const double* q, std::size_t slot) const {
    const double* p = &coords_[slot * n_];
    double s = 0.0;
    for (std::size_t d = 0; d < n_; ++d) {
      const double diff = q[d] - p[d];
      s += diff * diff;
    }
    return s;
  }

  static void offer(Heap& heap, std::size_t k, const Candidate& c) {
    if (heap.size() < k) {
      heap.push(c);
    } else if (c < heap.top()) {
      heap.pop();
      heap.push(c);
    }
  }

  void compact() {
    std::vector<double> coords;
    std::vector<std::size_t> ids;
    std::vector<std::uint64_t> seq;
    coords.reserve((ids_.size() - dead_) * n_);
    ids.reserve(ids_.size() - dead_);
    seq.reserve(ids_.size() - dead_);
    slot_of_.clear();
    for (std::size_t slot = 0; slot < ids_.size(); ++slot) {
      if (!alive_[slot]) continue;
      slot_of_.emplace(ids_[slot], ids.size());
      coords.insert(coords.end(), coords_.begin() + static_cast<std::ptrdiff_t>(slot * n_),
                    coords_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * n_));
      ids.push_back(ids_[slot]);
      seq.push_back(seq_[slot]);
    }
    coords_ = std::move(coords);
    ids_ = std::move(ids);
    seq_ = std::move(seq);
    alive_.assign(ids_.size(), 1);
    dead_ = 0;
  }

  void build(std::size_t lo, std::size_t hi) {
    if (hi - lo <= kLeaf) return;
    std::size_t best_dim = 0;
    double best_spread = -1.0;
    for (std::size_t d = 0; d < n_; ++d) {
      double mn = kInfinity;
      double mx = -kInfinity;
      for (std::size_t i = lo; i < hi; ++i) {
        const double v = coord(perm_[i], d);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mx - mn > best_spread) {
        best_spread = mx - mn;
        best_dim = d;
      }
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(lo),
                     perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                     perm_.begin() + static_cast<std::ptrdiff_t>(hi),
                     [&](std::size_t a, std::size_t b) { return coord(a, best_dim) < coord(b, best_dim); });
    split_dim_[mid] = best_dim;
    build(lo, mid);
    build(mid + 1, hi);
  }

  template <class Keep>
  void radius_node(const double* q, double r2, std::size_t lo, std::size_t hi, Keep& keep,
                   std::vector<std::size_t>& out) const {
    if (hi - lo <= kLeaf) {
      for (std::size_t i = lo; i < hi; ++i) {
        const std::size_t slot = perm_[i];
        if (alive_[slot] && dist2(q, slot) <= r2 && keep(ids_[slot])) out.push_back(ids_[slot]);
      }
      return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t slot = perm_[mid];
    if (alive_[slot] && dist2(q, slot) <= r2 && keep(ids_[slot])) out.push_back(ids_[slot]);
    const std::size_t d = split_dim_[mid];
    const double diff = q[d] - coord(slot, d);
    if (diff <= 0.0) {
      radius_node(q, r2, lo, mid, keep, out);
      if (diff * diff <= r2) radius_node(q, r2, mid + 1, hi, keep, out);
    } else {
      radius_node(q, r2, mid + 1, hi, keep, out);
      if (diff * diff <= r2) radius_node(q, r2, lo, mid, keep, out);
    }
  }

  template <class Keep>
  void knn_node(const double* q, std::size_t k, std::size_t lo, std::size_t hi, Keep& keep,
                Heap& heap) const {
    if (hi - lo <= kLeaf) {
      for (std::size_t i = lo; i < hi; ++i) {
        const std::size_t slot = perm_[i];
        if (alive_[slot] && keep(ids_[slot])) offer(heap, k, {dist2(q, slot), seq_[slot], slot});
      }
      return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t slot = perm_[mid];
    if (alive_[slot] && keep(ids_[slot])) offer(heap, k, {dist2(q, slot), seq_[slot], slot});
    const std::size_t d = split_dim_[mid];
    const double diff = q[d] - coord(slot, d);
    const bool left_first = diff <= 0.0;
    if (left_first) {
      knn_node(q, k, lo, mid, keep, heap);
    } else {
      knn_node(q, k, mid + 1, hi, keep, heap);
    }
    // Ties on the splitting plane can sit on either side, so visit on equality.
    if (heap.size() < k || diff * diff <= heap.top().d2) {
      if (left_first) {
        knn_node(q, k, mid + 1, hi, keep, heap);
      } else {
        knn_node(q, k, lo, mid, keep, heap);
      }
    }
  }

  std::size_t n_;
  std::vector<double> coords_;
  std::vector<std::size_t> ids_;
  std::vector<std::uint64_t> seq_;
  std::vector<char> alive_;
  std::unordered_map<std::size_t, std::size_t> slot_of_;
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> split_dim_;
  std::size_t built_ = 0;
  std::size_t dead_ = 0;
  std::uint64_t next_seq_ = 0;
};

}  // namespace bitstar
