// KD-tree over slots of a flat coordinate buffer. Used by KnnStore:
// insertions descend into a leaf bucket, removals are tombstones resolved
// through the `alive` callback, and the owner rebuilds periodically.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace ust::detail {

struct NeighborKey {
  double dist2;
  std::uint64_t id;
  std::size_t slot;

  bool operator<(const NeighborKey& o) const {
    return dist2 < o.dist2 || (dist2 == o.dist2 && id < o.id);
  }
};

/// The k best keys seen so far, kept sorted ascending (k is small).
class BoundedHeap {
 public:
  explicit BoundedHeap(std::size_t k) : k_(k) { keys_.reserve(k + 1); }

  void offer(const NeighborKey& key) {
    if (k_ == 0) return;
    if (keys_.size() == k_ && !(key < keys_.back())) return;
    auto pos = std::upper_bound(keys_.begin(), keys_.end(), key);
    keys_.insert(pos, key);
    if (keys_.size() > k_) keys_.pop_back();
  }
  bool full() const { return keys_.size() >= k_; }
  double worst() const { return keys_.back().dist2; }

  /// Ascending (dist2, id) order.
  std::vector<NeighborKey> take_sorted() { return std::move(keys_); }

 private:
  std::size_t k_;
  std::vector<NeighborKey> keys_;
};

inline constexpr std::size_t kLanes = 4;

/// Squared distances from q to the kLanes points of one leaf block (laid out
/// dimension-major, block[d * kLanes + lane]). Each lane sums its terms in
/// dimension order, exactly like a scalar loop. Returns the mask of lanes
/// whose distance is <= bound; `out` is only written when it is non-zero.
unsigned block_distances(const double* q, const double* block, std::size_t dim, double bound,
                     double* out);

class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 32;

  KdTree() = default;

  /// Rebuilds the tree over `slots` (rows of `coords`, `dim` columns).
  void build(const std::vector<double>& coords, std::size_t dim, std::vector<std::size_t> slots) {
    dim_ = dim;
    nodes_.clear();
    size_ = slots.size();
    build_node(coords, slots, 0, slots.size());
  }

  /// Adds one slot to the leaf its coordinates fall into.
  void insert(const std::vector<double>& coords, std::size_t slot) {
    if (nodes_.empty()) nodes_.push_back(Node{});
    std::size_t idx = 0;
    while (nodes_[idx].left >= 0) {
      const Node& n = nodes_[idx];
      idx = static_cast<std::size_t>(coords[slot * dim_ + n.split_dim] < n.split_val ? n.left
                                                                                        : n.right);
    }
    add_to_leaf(nodes_[idx], coords, slot);
    ++size_;
  }

  std::size_t indexed_count() const { return size_; }

  std::vector<std::size_t> indexed_slots() const {
    std::vector<std::size_t> out;
    out.reserve(size_);
    for (const Node& n : nodes_) out.insert(out.end(), n.points.begin(), n.points.end());
    return out;
  }

  /// Offers every alive indexed slot that can still enter `heap`.
  template <class Alive, class IdOf>
  void search(const std::vector<double>& coords, std::span<const double> q, BoundedHeap& heap,
              const Alive& alive, const IdOf& id_of) const {
    if (nodes_.empty()) return;
    std::vector<double> off(dim_, 0.0);
    search_node(coords, 0, q, heap, alive, id_of, 0.0, off);
  }

 private:
  struct Node {
    std::size_t split_dim = 0;
    double split_val = 0.0;
    int left = -1;
    int right = -1;
    std::vector<std::size_t> points;  // leaves only
    // Coordinates of `points` in blocks of kLanes, dimension-major within a
    // block; unused lanes hold +inf.
    std::vector<double> values;
  };

  void add_to_leaf(Node& leaf, const std::vector<double>& coords, std::size_t slot) const {
    const std::size_t lane = leaf.points.size() % kLanes;
    if (lane == 0) {
      leaf.values.resize(leaf.values.size() + dim_ * kLanes,
                         std::numeric_limits<double>::infinity());
    }
    double* block = leaf.values.data() + leaf.values.size() - dim_ * kLanes;
    for (std::size_t d = 0; d < dim_; ++d) block[d * kLanes + lane] = coords[slot * dim_ + d];
    leaf.points.push_back(slot);
  }

  int build_node(const std::vector<double>& coords, std::vector<std::size_t>& slots,
                 std::size_t begin, std::size_t end) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    auto make_leaf = [&] {
      Node& leaf = nodes_[static_cast<std::size_t>(idx)];
      for (std::size_t i = begin; i < end; ++i) add_to_leaf(leaf, coords, slots[i]);
      return idx;
    };
    if (end - begin <= kLeafSize) return make_leaf();

    std::size_t best_dim = 0;
    double best_spread = -1.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      double lo = coords[slots[begin] * dim_ + d];
      double hi = lo;
      for (std::size_t i = begin + 1; i < end; ++i) {
        const double v = coords[slots[i] * dim_ + d];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = d;
      }
    }
    if (best_spread <= 0.0) return make_leaf();  // all points coincide

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(slots.begin() + static_cast<std::ptrdiff_t>(begin),
                     slots.begin() + static_cast<std::ptrdiff_t>(mid),
                     slots.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return coords[a * dim_ + best_dim] < coords[b * dim_ + best_dim];
                     });
    const double split = coords[slots[mid] * dim_ + best_dim];
    // Left holds coordinates <= split, right holds >= split; insert() sends
    // ties right, which preserves both bounds.
    const int left = build_node(coords, slots, begin, mid);
    const int right = build_node(coords, slots, mid, end);
    Node& n = nodes_[static_cast<std::size_t>(idx)];
    n.split_dim = best_dim;
    n.split_val = split;
    n.left = left;
    n.right = right;
    return idx;
  }

  // Far subtrees are bounded by the squared distance from q to the cell,
  // tracked incrementally through per-dimension offsets.
  template <class Alive, class IdOf>
  void search_node(const std::vector<double>& coords, int idx, std::span<const double> q,
                   BoundedHeap& heap, const Alive& alive, const IdOf& id_of, double rd,
                   std::vector<double>& off) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    if (n.left < 0) {
      double d2[kLanes];
      for (std::size_t b = 0; b * kLanes < n.points.size(); ++b) {
        const double bound = heap.full() ? heap.worst() : std::numeric_limits<double>::infinity();
        unsigned mask = block_distances(q.data(), &n.values[b * dim_ * kLanes], dim_, bound, d2);
        for (; mask != 0; mask &= mask - 1) {
          const std::size_t l = static_cast<std::size_t>(__builtin_ctz(mask));
          if (b * kLanes + l >= n.points.size()) break;
          const std::size_t slot = n.points[b * kLanes + l];
          if (!alive(slot)) continue;
          heap.offer({d2[l], id_of(slot), slot});
        }
      }
      return;
    }
    const double diff = q[n.split_dim] - n.split_val;
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    search_node(coords, near, q, heap, alive, id_of, rd, off);
    const double old = off[n.split_dim];
    const double far_rd = rd - old * old + diff * diff;
    // `<=` keeps equal-distance points with older ids reachable.
    if (!heap.full() || far_rd <= heap.worst()) {
      off[n.split_dim] = diff;
      search_node(coords, far, q, heap, alive, id_of, far_rd, off);
      off[n.split_dim] = old;
    }
  }

  std::size_t dim_ = 0;
  std::size_t size_ = 0;
  std::vector<Node> nodes_;
};

}  // namespace ust::detail
