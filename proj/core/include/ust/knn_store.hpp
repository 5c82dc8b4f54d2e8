// Budgeted k-nearest-neighbor exemplar store: the fast, short-memory classifier.
//
// Budgeting rules applied on top of plain KNN voting:
//   1. a new sample whose whole neighborhood already carries its label is
//      discarded (absorbed);
//   2. every stored sample carries a countdown timer; when it reaches zero the
//      sample is flagged;
//   3. a new sample whose whole neighborhood carries the opposite label is
//      stored as an outlier;
//   4. storing a sample adds one frame to the timers of its differently
//      labeled neighbors;
//   5. on pruning, a flagged sample is removed when its neighborhood agrees with
//      it, or when it is an outlier that still has no same-label neighbor;
//      every other flagged sample becomes a permanent prototype.
// The neighborhood is the same k used for voting. Unanimity (rules 1, 3, 5) is
// only judged on a full neighborhood of k exemplars.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ust/core.hpp"

namespace ust {

namespace detail {
class KdTree;
}

/// score() on a store with no exemplars.
class EmptyStoreError : public std::logic_error {
 public:
  EmptyStoreError() : std::logic_error("score() on an empty exemplar store") {}
};

struct KnnConfig {
  int k = 10;
  /// Initial timer for new exemplars, in frames.
  int initial_timer = 10;
  /// false: plain KNN, every insert is stored and tick()/prune() do nothing
  /// beyond the hard cap.
  bool budgeting = true;
  /// Hard cap on the number of exemplars; evicts the oldest non-prototype.
  std::optional<std::size_t> budget_cap;
};

struct Exemplar {
  FeatureVector feature;
  Label label = Label::kNegative;
  int timer = 0;
  bool flagged = false;
  bool outlier = false;
  bool prototype = false;
  int inserted_at = 0;
  std::uint64_t id = 0;
};

struct Neighbor {
  std::uint64_t id;
  double distance2;
  Label label;
};

enum class InsertOutcome { kAbsorbed, kInserted, kInsertedAsOutlier };

struct PruneStats {
  std::size_t absorbed = 0;
  std::size_t outliers_removed = 0;
  std::size_t prototypes_promoted = 0;
  std::size_t evicted = 0;
};

/// Lifetime totals, mainly for diagnostics and the budgeting acceptance checks.
struct BudgetCounters {
  std::size_t insert_attempts = 0;
  std::size_t absorbed_on_insert = 0;
  std::size_t stored = 0;
  std::size_t outliers_marked = 0;
  std::size_t pruned_absorbed = 0;
  std::size_t pruned_outliers = 0;
  std::size_t promoted = 0;
  std::size_t evicted = 0;
  std::size_t rebuilds = 0;
};

/// score() and nearest() are const and safe to call concurrently; insert(),
/// tick() and prune() need exclusive access.
class KnnStore {
 public:
  KnnStore(std::size_t dim, KnnConfig config);
  ~KnnStore();
  KnnStore(KnnStore&&) noexcept;
  KnnStore& operator=(KnnStore&&) noexcept;
  KnnStore(const KnnStore&) = delete;
  KnnStore& operator=(const KnnStore&) = delete;

  std::size_t dim() const { return dim_; }
  const KnnConfig& config() const { return config_; }
  std::size_t size() const { return alive_count_; }
  bool empty() const { return alive_count_ == 0; }
  const BudgetCounters& counters() const { return counters_; }

  /// Mean label of the k nearest exemplars, in [-1, 1].
  double score(std::span<const double> x) const;
  double score(const FeatureVector& x) const { return score(x.values()); }

  /// Up to k nearest exemplars, ascending by (distance, insertion order).
  std::vector<Neighbor> nearest(std::span<const double> x, std::size_t k) const;

  InsertOutcome insert(const FeatureVector& x, Label label, int frame);
  /// One frame of countdown; returns the number of newly flagged exemplars.
  std::size_t tick();
  PruneStats prune();

  /// Live exemplars in insertion order.
  std::vector<Exemplar> exemplars() const;
  std::optional<Exemplar> find(std::uint64_t id) const;

  /// Index and exemplar collection hold exactly the same members.
  bool index_consistent() const;

  /// One CSV row per exemplar: id,label,timer,flagged,outlier,prototype,inserted_at,f0..f{d-1}
  void write_snapshot(std::ostream& out) const;

 private:
  struct Hit {
    std::size_t slot;
    double dist2;
  };

  std::vector<Hit> nearest_slots(std::span<const double> x, std::size_t k,
                                 std::optional<std::size_t> exclude) const;
  void remove_slot(std::size_t slot);
  void evict_for_cap(std::size_t room);
  void maybe_rebuild();
  void rebuild();

  std::size_t dim_;
  KnnConfig config_;
  std::vector<Exemplar> slots_;
  std::vector<double> coords_;
  std::vector<char> alive_;
  std::size_t alive_count_ = 0;
  std::uint64_t next_id_ = 0;
  std::size_t changes_since_rebuild_ = 0;
  std::unique_ptr<detail::KdTree> tree_;
  BudgetCounters counters_;
};

}  // namespace ust
