// The co-tracking loop: a budgeted KNN scores candidates, the samples it is
// least sure about are labeled by the oracle, the target is localized as the
// score-weighted mean of positive candidates, and both classifiers are
// updated on their own schedules.
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ust/core.hpp"
#include "ust/features.hpp"
#include "ust/frame_source.hpp"
#include "ust/knn_store.hpp"
#include "ust/oracle.hpp"
#include "ust/sampler.hpp"

namespace ust {

/// Ablation arms. ust: both classifiers; knn-only: plain KNN trained on its
/// own labels; knn-budgeted-only: the same with budgeting; oracle-only: the
/// oracle labels every candidate.
enum class Variant { kUst, kKnnOnly, kKnnBudgetedOnly, kOracleOnly };

std::string_view to_string(Variant v);
/// Throws PreconditionError on unknown names.
Variant parse_variant(std::string_view name);
std::span<const Variant> all_variants();

enum class OracleKind { kScripted, kArchive };

struct OracleConfig {
  OracleKind kind = OracleKind::kScripted;
  double flip_probability = 0.0;
  double overlap_threshold = 0.6;
  /// Vote neighborhood of the archive oracle.
  int k = 15;
};

struct InitConfig {
  int positives = 20;
  /// Positive jitter as a fraction of the box extent.
  double jitter = 0.05;
  int global_negatives = 30;
};

struct TrackerConfig {
  int k = 10;
  int m = 5;
  double tau_l = -0.4;
  double tau_u = 0.4;
  int tau_p = 3;
  double tau_a = 1.0;
  int delta = 10;
  int alpha0 = 10;
  std::optional<std::size_t> budget_cap;
  /// Projected feature dimension (clamped to the raw dimension and to one less
  /// than the number of seed samples).
  std::size_t feature_dim = 20;
  SamplerConfig sampler;
  OracleConfig oracle;
  InitConfig init;
  /// Bins per channel for image sequences.
  int histogram_bins = 4;

  void validate() const;
};

/// U = {i : tau_l < s_i < tau_u} union the m indices with the smallest |s_i|
/// (ties by index). Returned ascending.
std::vector<std::size_t> select_uncertain(std::span<const double> scores, double tau_l,
                                          double tau_u, int m);

/// Scores in-ROI candidates with the fast classifier and labels them: the
/// uncertain set goes to the oracle (ust), or keeps the fast label (knn arms);
/// oracle-only and an empty fast store send every in-ROI candidate to the
/// oracle. Fills score, label, labeled_by and weight; returns the uncertain set
/// as indices into `cands`.
std::vector<std::size_t> label_candidates(std::vector<Candidate>& cands, const KnnStore* fast,
                                          const Oracle* oracle, const TrackerConfig& config,
                                          Variant variant, int frame);

struct Localization {
  TargetState estimate;
  bool occluded = false;
  int positives = 0;
  double weight_sum = 0.0;
};

/// Weighted mean of the positive local candidates (global and out-of-ROI ones
/// excluded), or `prev` with occluded = true when the positive count does not
/// exceed tau_p or the summed weight does not exceed tau_a.
Localization localize(std::span<const Candidate> candidates, int tau_p, double tau_a,
                      const TargetState& prev);

struct FrameResult {
  int frame = 0;
  TargetState estimate;
  bool occluded = false;
  std::vector<Candidate> candidates;  // local draws first, then global ones
  std::vector<std::size_t> uncertain;  // indices into candidates
  std::size_t uncertain_count = 0;
  std::size_t oracle_queries_this_frame = 0;
  std::size_t knn_store_size = 0;
  bool retrained_oracle = false;
  /// Candidates inserted into the fast classifier this frame.
  std::vector<std::size_t> fast_updates;
  int positives = 0;
  double weight_sum = 0.0;
};

/// Builds the oracle named by the configuration. Scripted oracles need a
/// source that knows its ground truth.
std::unique_ptr<Oracle> make_oracle(const OracleConfig& config, const FrameSource& source,
                                    std::size_t feature_dim, std::uint64_t seed);

class CoTracker {
 public:
  /// Seeds both classifiers from frame 0: jittered copies of `box` are
  /// positives, rings around it and distant samples are negatives; the PCA
  /// projector is fitted on that pool and frozen.
  static CoTracker init(FrameSource& source, const TargetState& box, TrackerConfig config,
                        Variant variant, std::uint64_t seed);

  /// Labels, localizes and updates for frame t (must follow the last frame).
  FrameResult step(int t);

  const TrackerConfig& config() const { return config_; }
  Variant variant() const { return variant_; }
  const TargetState& estimate() const { return estimate_; }
  int last_frame() const { return last_frame_; }
  const FeatureProjector& projector() const { return *projector_; }
  /// nullptr for oracle-only.
  const KnnStore* fast() const { return fast_.get(); }
  /// nullptr for the knn-only arms.
  const Oracle* oracle() const { return oracle_.get(); }
  std::uint64_t oracle_queries() const { return oracle_ ? oracle_->query_count() : 0; }

  /// Projected feature of `box` in the currently loaded frame.
  FeatureVector feature_of(int t, const TargetState& box) const;

 private:
  CoTracker(FrameSource& source, TrackerConfig config, Variant variant, std::uint64_t seed);

  FrameSource* source_;
  TrackerConfig config_;
  Variant variant_;
  Sampler sampler_;
  std::optional<FeatureProjector> projector_;
  std::unique_ptr<KnnStore> fast_;
  std::unique_ptr<Oracle> oracle_;
  TargetState estimate_;
  int last_frame_ = 0;
};

}  // namespace ust
