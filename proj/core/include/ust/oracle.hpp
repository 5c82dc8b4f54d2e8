// The slow, long-memory classifier queried for uncertain samples.
#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string_view>

#include "ust/core.hpp"
#include "ust/knn_store.hpp"

namespace ust {

class UntrainedOracleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// What the oracle sees of a candidate: its feature and, for test doubles that
/// consult ground truth, the state and frame it was sampled at.
struct OracleQuery {
  const FeatureVector& feature;
  const TargetState& state;
  int frame;
};

struct OracleAnswer {
  double decision;  // in [-1, 1]
  Label label;      // sign(decision), ties negative
};

/// label()/query() are const and safe to call concurrently; stage()/commit()/
/// retrain() need exclusive access.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual std::string_view name() const = 0;

  /// One counted query.
  OracleAnswer query(const OracleQuery& q) const {
    queries_.fetch_add(1, std::memory_order_relaxed);
    const double d = decide(q);
    return {d, sign_label(d)};
  }
  Label label(const OracleQuery& q) const { return query(q).label; }

  std::uint64_t query_count() const { return queries_.load(std::memory_order_relaxed); }

  /// Folds `batch` into the model.
  virtual void retrain(const LabeledSet& batch) = 0;

  /// Buffers samples until the next commit().
  void stage(LabeledSample sample) { staging_.push_back(std::move(sample)); }
  std::size_t staged() const { return staging_.size(); }
  /// retrain() with everything staged since the previous commit.
  void commit() {
    LabeledSet batch;
    batch.swap(staging_);
    retrain(batch);
  }

 protected:
  virtual double decide(const OracleQuery& q) const = 0;

 private:
  mutable std::atomic<std::uint64_t> queries_{0};
  LabeledSet staging_;
};

/// Unbudgeted nearest-neighbor vote over every sample ever received. Labels
/// reflect the archive as of the last retrain only.
class ArchiveNNOracle final : public Oracle {
 public:
  ArchiveNNOracle(std::size_t dim, int k);

  std::string_view name() const override { return "archive"; }
  void retrain(const LabeledSet& batch) override;
  std::size_t archive_size() const { return archive_.size(); }
  bool trained() const { return trained_; }

 protected:
  double decide(const OracleQuery& q) const override;

 private:
  KnnStore archive_;
  bool trained_ = false;
};

struct GroundTruthFrame {
  TargetState box;
  bool occluded = false;
};

using GroundTruthFn = std::function<GroundTruthFrame(int frame)>;

struct ScriptedOracleConfig {
  double flip_probability = 0.0;
  double overlap_threshold = 0.5;
  std::uint64_t seed = 0;
};

/// Test double: positive iff the queried box overlaps the visible ground truth
/// by more than the threshold, flipped with a fixed probability. The flip is a
/// hash of (seed, frame, box), so repeated queries agree.
class ScriptedOracle final : public Oracle {
 public:
  ScriptedOracle(GroundTruthFn truth, ScriptedOracleConfig config);

  std::string_view name() const override { return "scripted"; }
  void retrain(const LabeledSet&) override {}
  const ScriptedOracleConfig& config() const { return config_; }

 protected:
  double decide(const OracleQuery& q) const override;

 private:
  GroundTruthFn truth_;
  ScriptedOracleConfig config_;
};

}  // namespace ust
