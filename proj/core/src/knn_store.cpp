#include "ust/knn_store.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "kd_tree.hpp"

namespace ust {

KnnStore::KnnStore(std::size_t dim, KnnConfig config)
    : dim_(dim), config_(config), tree_(std::make_unique<detail::KdTree>()) {
  if (dim == 0) throw PreconditionError("KnnStore: dimension must be positive");
  if (config_.k < 1) throw PreconditionError("KnnStore: k must be >= 1");
  if (config_.initial_timer < 0) throw PreconditionError("KnnStore: negative initial timer");
  if (config_.budget_cap && *config_.budget_cap == 0) {
    throw PreconditionError("KnnStore: budget cap must be positive");
  }
  tree_->build(coords_, dim_, {});
}

KnnStore::~KnnStore() = default;
KnnStore::KnnStore(KnnStore&&) noexcept = default;
KnnStore& KnnStore::operator=(KnnStore&&) noexcept = default;

std::vector<KnnStore::Hit> KnnStore::nearest_slots(std::span<const double> x, std::size_t k,
                                                   std::optional<std::size_t> exclude) const {
  detail::BoundedHeap heap(k);
  tree_->search(
      coords_, x, heap,
      [&](std::size_t s) { return alive_[s] != 0 && (!exclude || s != *exclude); },
      [&](std::size_t s) { return slots_[s].id; });
  std::vector<Hit> out;
  for (const auto& key : heap.take_sorted()) out.push_back({key.slot, key.dist2});
  return out;
}

double KnnStore::score(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw PreconditionError(fmt::format("score: expected dimension {}, got {}", dim_, x.size()));
  }
  if (empty()) throw EmptyStoreError();
  const auto hits = nearest_slots(x, static_cast<std::size_t>(config_.k), std::nullopt);
  double sum = 0.0;
  for (const Hit& h : hits) sum += to_int(slots_[h.slot].label);
  return sum / static_cast<double>(hits.size());
}

std::vector<Neighbor> KnnStore::nearest(std::span<const double> x, std::size_t k) const {
  if (x.size() != dim_) throw PreconditionError("nearest: dimension mismatch");
  std::vector<Neighbor> out;
  for (const Hit& h : nearest_slots(x, k, std::nullopt)) {
    out.push_back({slots_[h.slot].id, h.dist2, slots_[h.slot].label});
  }
  return out;
}

InsertOutcome KnnStore::insert(const FeatureVector& x, Label label, int frame) {
  if (x.size() != dim_) {
    throw PreconditionError(fmt::format("insert: expected dimension {}, got {}", dim_, x.size()));
  }
  ++counters_.insert_attempts;

  bool outlier = false;
  if (config_.budgeting) {
    const auto k = static_cast<std::size_t>(config_.k);
    const auto hits = nearest_slots(x.values(), k, std::nullopt);
    const bool full = hits.size() == k;
    const auto same = static_cast<std::size_t>(std::count_if(
        hits.begin(), hits.end(), [&](const Hit& h) { return slots_[h.slot].label == label; }));
    if (full && same == k) {
      ++counters_.absorbed_on_insert;
      return InsertOutcome::kAbsorbed;
    }
    outlier = full && same == 0;
    for (const Hit& h : hits) {
      if (slots_[h.slot].label != label) ++slots_[h.slot].timer;
    }
  }

  evict_for_cap(1);

  const std::size_t slot = slots_.size();
  Exemplar e;
  e.feature = x;
  e.label = label;
  e.timer = config_.initial_timer;
  e.outlier = outlier;
  e.inserted_at = frame;
  e.id = next_id_++;
  slots_.push_back(std::move(e));
  coords_.insert(coords_.end(), x.values().begin(), x.values().end());
  alive_.push_back(1);
  ++alive_count_;
  tree_->insert(coords_, slot);
  ++changes_since_rebuild_;
  ++counters_.stored;
  if (outlier) ++counters_.outliers_marked;
  maybe_rebuild();
  return outlier ? InsertOutcome::kInsertedAsOutlier : InsertOutcome::kInserted;
}

std::size_t KnnStore::tick() {
  if (!config_.budgeting) return 0;
  std::size_t newly = 0;
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    Exemplar& e = slots_[s];
    if (!alive_[s] || e.prototype || e.flagged) continue;
    if (e.timer > 0) --e.timer;
    if (e.timer == 0) {
      e.flagged = true;
      ++newly;
    }
  }
  return newly;
}

PruneStats KnnStore::prune() {
  PruneStats stats;
  if (config_.budgeting) {
    // Every flagged exemplar is judged against the store as it stands before
    // any removal of this pass.
    const auto k = static_cast<std::size_t>(config_.k);
    std::vector<std::size_t> doomed;
    std::vector<std::size_t> promoted;
    for (std::size_t s = 0; s < slots_.size(); ++s) {
      if (!alive_[s] || !slots_[s].flagged) continue;
      const Exemplar& e = slots_[s];
      const auto hits = nearest_slots(e.feature.values(), k, s);
      const bool full = hits.size() == k;
      const auto same = static_cast<std::size_t>(std::count_if(
          hits.begin(), hits.end(), [&](const Hit& h) { return slots_[h.slot].label == e.label; }));
      if (full && same == k) {
        doomed.push_back(s);
        ++stats.absorbed;
      } else if (e.outlier && full && same == 0) {
        doomed.push_back(s);
        ++stats.outliers_removed;
      } else {
        promoted.push_back(s);
        ++stats.prototypes_promoted;
      }
    }
    for (std::size_t s : doomed) remove_slot(s);
    for (std::size_t s : promoted) {
      slots_[s].prototype = true;
      slots_[s].flagged = false;
    }
    counters_.pruned_absorbed += stats.absorbed;
    counters_.pruned_outliers += stats.outliers_removed;
    counters_.promoted += stats.prototypes_promoted;
  }
  const std::size_t before = counters_.evicted;
  evict_for_cap(0);
  stats.evicted = counters_.evicted - before;
  maybe_rebuild();
  return stats;
}

void KnnStore::remove_slot(std::size_t slot) {
  alive_[slot] = 0;
  --alive_count_;
  ++changes_since_rebuild_;
}

void KnnStore::evict_for_cap(std::size_t room) {
  if (!config_.budget_cap) return;
  const std::size_t cap = *config_.budget_cap;
  // Slots are kept in insertion order, so the first match is the oldest.
  while (alive_count_ + room > cap && alive_count_ > 0) {
    std::optional<std::size_t> victim;
    for (std::size_t s = 0; s < slots_.size(); ++s) {
      if (alive_[s] && !slots_[s].prototype) {
        victim = s;
        break;
      }
    }
    if (!victim) {
      for (std::size_t s = 0; s < slots_.size(); ++s) {
        if (alive_[s]) {
          victim = s;
          break;
        }
      }
    }
    remove_slot(*victim);
    ++counters_.evicted;
  }
}

void KnnStore::maybe_rebuild() {
  if (changes_since_rebuild_ * 4 > alive_count_) rebuild();
}

void KnnStore::rebuild() {
  std::vector<Exemplar> slots;
  std::vector<double> coords;
  slots.reserve(alive_count_);
  coords.reserve(alive_count_ * dim_);
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (!alive_[s]) continue;
    coords.insert(coords.end(), coords_.begin() + static_cast<std::ptrdiff_t>(s * dim_),
                  coords_.begin() + static_cast<std::ptrdiff_t>((s + 1) * dim_));
    slots.push_back(std::move(slots_[s]));
  }
  slots_ = std::move(slots);
  coords_ = std::move(coords);
  alive_.assign(slots_.size(), 1);
  std::vector<std::size_t> all(slots_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  tree_->build(coords_, dim_, std::move(all));
  changes_since_rebuild_ = 0;
  ++counters_.rebuilds;
}

std::vector<Exemplar> KnnStore::exemplars() const {
  std::vector<Exemplar> out;
  out.reserve(alive_count_);
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (alive_[s]) out.push_back(slots_[s]);
  }
  return out;
}

std::optional<Exemplar> KnnStore::find(std::uint64_t id) const {
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (alive_[s] && slots_[s].id == id) return slots_[s];
  }
  return std::nullopt;
}

bool KnnStore::index_consistent() const {
  std::vector<std::size_t> indexed = tree_->indexed_slots();
  std::sort(indexed.begin(), indexed.end());
  if (std::adjacent_find(indexed.begin(), indexed.end()) != indexed.end()) return false;
  std::vector<std::size_t> live;
  for (std::size_t s : indexed) {
    if (s >= slots_.size()) return false;
    if (alive_[s]) live.push_back(s);
  }
  std::size_t alive_total = 0;
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (!alive_[s]) continue;
    ++alive_total;
    if (!std::binary_search(indexed.begin(), indexed.end(), s)) return false;
  }
  return alive_total == alive_count_ && live.size() == alive_count_;
}

void KnnStore::write_snapshot(std::ostream& out) const {
  out << "id,label,timer,flagged,outlier,prototype,inserted_at";
  for (std::size_t d = 0; d < dim_; ++d) out << ",f" << d;
  out << '\n';
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (!alive_[s]) continue;
    const Exemplar& e = slots_[s];
    fmt::print(out, "{},{},{},{},{},{},{}", e.id, to_int(e.label), e.timer, int{e.flagged},
               int{e.outlier}, int{e.prototype}, e.inserted_at);
    for (double v : e.feature.values()) fmt::print(out, ",{:.9g}", v);
    out << '\n';
  }
}

}  // namespace ust
