#include "ust/oracle.hpp"

#include "ust/hash.hpp"

namespace ust {

ArchiveNNOracle::ArchiveNNOracle(std::size_t dim, int k)
    : archive_(dim, KnnConfig{.k = k, .initial_timer = 0, .budgeting = false, .budget_cap = {}}) {}

void ArchiveNNOracle::retrain(const LabeledSet& batch) {
  for (const LabeledSample& s : batch) archive_.insert(s.feature, s.label, s.frame);
  trained_ = true;
}

double ArchiveNNOracle::decide(const OracleQuery& q) const {
  if (!trained_ || archive_.empty()) {
    throw UntrainedOracleError("archive oracle queried before any training data");
  }
  return archive_.score(q.feature);
}

ScriptedOracle::ScriptedOracle(GroundTruthFn truth, ScriptedOracleConfig config)
    : truth_(std::move(truth)), config_(config) {
  if (!truth_) throw PreconditionError("scripted oracle needs a ground-truth source");
  if (!(config_.flip_probability >= 0.0 && config_.flip_probability < 1.0)) {
    throw PreconditionError("flip_probability must lie in [0, 1)");
  }
  if (!(config_.overlap_threshold > 0.0 && config_.overlap_threshold < 1.0)) {
    throw PreconditionError("overlap_threshold must lie in (0, 1)");
  }
}

double ScriptedOracle::decide(const OracleQuery& q) const {
  const GroundTruthFrame gt = truth_(q.frame);
  bool positive = !gt.occluded && iou(q.state, gt.box) > config_.overlap_threshold;
  if (config_.flip_probability > 0.0) {
    std::uint64_t h = hash_combine(config_.seed, static_cast<std::uint64_t>(q.frame));
    h = hash_combine(h, q.state.cx);
    h = hash_combine(h, q.state.cy);
    h = hash_combine(h, q.state.w);
    h = hash_combine(h, q.state.h);
    if (unit_interval(h) < config_.flip_probability) positive = !positive;
  }
  return positive ? 1.0 : -1.0;
}

}  // namespace ust
