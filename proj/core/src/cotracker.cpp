#include "ust/cotracker.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ust/hash.hpp"

namespace ust {

namespace {

constexpr std::array<Variant, 4> kVariants = {Variant::kUst, Variant::kKnnOnly,
                                              Variant::kKnnBudgetedOnly, Variant::kOracleOnly};

bool uses_fast(Variant v) { return v != Variant::kOracleOnly; }
bool uses_oracle(Variant v) { return v == Variant::kUst || v == Variant::kOracleOnly; }

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kUst:
      return "ust";
    case Variant::kKnnOnly:
      return "knn-only";
    case Variant::kKnnBudgetedOnly:
      return "knn-budgeted-only";
    case Variant::kOracleOnly:
      return "oracle-only";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kVariants) {
    if (to_string(v) == name) return v;
  }
  throw PreconditionError(fmt::format("unknown variant '{}'", name));
}

std::span<const Variant> all_variants() { return kVariants; }

void TrackerConfig::validate() const {
  if (k < 1) throw PreconditionError("k must be >= 1");
  if (m < 0) throw PreconditionError("m must be >= 0");
  if (!(tau_l < 0.0 && 0.0 < tau_u)) throw PreconditionError("need tau_l < 0 < tau_u");
  if (m > sampler.n) throw PreconditionError("m must not exceed n");
  if (delta < 1) throw PreconditionError("delta must be >= 1");
  if (alpha0 < 0) throw PreconditionError("alpha0 must be >= 0");
  if (tau_p < 0) throw PreconditionError("tau_p must be >= 0");
  if (feature_dim == 0) throw PreconditionError("feature_dim must be positive");
  if (budget_cap && *budget_cap == 0) throw PreconditionError("budget_cap must be positive");
  if (oracle.k < 1) throw PreconditionError("oracle k must be >= 1");
  if (init.positives < 1 || init.global_negatives < 0 || init.jitter < 0) {
    throw PreconditionError("bad init configuration");
  }
  if (histogram_bins < 2) throw PreconditionError("histogram_bins must be >= 2");
  sampler.validate();
}

std::vector<std::size_t> select_uncertain(std::span<const double> scores, double tau_l,
                                          double tau_u, int m) {
  std::vector<char> chosen(scores.size(), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (tau_l < scores[i] && scores[i] < tau_u) chosen[i] = 1;
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t forced = std::min(static_cast<std::size_t>(std::max(m, 0)), scores.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(forced), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double fa = std::abs(scores[a]), fb = std::abs(scores[b]);
                      return fa < fb || (fa == fb && a < b);
                    });
  for (std::size_t i = 0; i < forced; ++i) chosen[order[i]] = 1;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (chosen[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> label_candidates(std::vector<Candidate>& cands, const KnnStore* fast,
                                          const Oracle* oracle, const TrackerConfig& config,
                                          Variant variant, int frame) {
  std::vector<std::size_t> roi;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    Candidate& c = cands[i];
    if (c.in_roi && !c.global) {
      roi.push_back(i);
    } else {
      c.label = Label::kNegative;
      c.labeled_by = LabelSource::kForcedBackground;
      c.weight = 0.0;
    }
  }

  auto ask_oracle = [&](Candidate& c) {
    if (!oracle) throw std::logic_error("variant needs an oracle but none is attached");
    const OracleAnswer a = oracle->query({c.feature, c.state, frame});
    c.label = a.label;
    c.labeled_by = LabelSource::kOracle;
    return a;
  };

  const bool cold = fast == nullptr || fast->empty();
  if (variant == Variant::kOracleOnly || (cold && oracle && uses_oracle(variant))) {
    for (std::size_t i : roi) {
      Candidate& c = cands[i];
      c.score = ask_oracle(c).decision;
      c.weight = importance_weight(*c.score, *c.label);
    }
    return roi;
  }

  std::vector<double> scores(roi.size(), 0.0);
  if (!cold) {
    for (std::size_t j = 0; j < roi.size(); ++j) scores[j] = fast->score(cands[roi[j]].feature);
  }
  const std::vector<std::size_t> picked = select_uncertain(scores, config.tau_l, config.tau_u, config.m);
  std::vector<char> in_u(roi.size(), 0);
  for (std::size_t j : picked) in_u[j] = 1;

  std::vector<std::size_t> uncertain;
  for (std::size_t j = 0; j < roi.size(); ++j) {
    Candidate& c = cands[roi[j]];
    c.score = scores[j];
    if (in_u[j]) uncertain.push_back(roi[j]);
    if (in_u[j] && variant == Variant::kUst) {
      ask_oracle(c);
    } else {
      c.label = sign_label(scores[j]);
      c.labeled_by = LabelSource::kFast;
    }
    c.weight = importance_weight(*c.score, *c.label);
  }
  return uncertain;
}

Localization localize(std::span<const Candidate> candidates, int tau_p, double tau_a,
                      const TargetState& prev) {
  Localization out;
  double sx = 0, sy = 0, sw = 0, sh = 0;
  for (const Candidate& c : candidates) {
    if (c.global || !c.in_roi || c.label != Label::kPositive) continue;
    const double pi = c.weight.value_or(importance_weight(c.score.value_or(0.0), *c.label));
    ++out.positives;
    out.weight_sum += pi;
    sx += pi * c.state.cx;
    sy += pi * c.state.cy;
    sw += pi * c.state.w;
    sh += pi * c.state.h;
  }
  if (out.positives > tau_p && out.weight_sum > tau_a && out.weight_sum > 0.0) {
    out.estimate = {sx / out.weight_sum, sy / out.weight_sum, sw / out.weight_sum,
                    sh / out.weight_sum};
    out.occluded = false;
  } else {
    out.estimate = prev;
    out.occluded = true;
  }
  return out;
}

std::unique_ptr<Oracle> make_oracle(const OracleConfig& config, const FrameSource& source,
                                    std::size_t feature_dim, std::uint64_t seed) {
  if (config.kind == OracleKind::kArchive) {
    return std::make_unique<ArchiveNNOracle>(feature_dim, config.k);
  }
  if (!source.truth(0)) {
    throw PreconditionError("scripted oracle needs a source with ground truth");
  }
  const FrameSource* src = &source;
  return std::make_unique<ScriptedOracle>(
      [src](int t) { return *src->truth(t); },
      ScriptedOracleConfig{config.flip_probability, config.overlap_threshold,
                           hash_combine(seed, std::uint64_t{0x0dac1e})});
}

CoTracker::CoTracker(FrameSource& source, TrackerConfig config, Variant variant,
                     std::uint64_t seed)
    : source_(&source),
      config_(std::move(config)),
      variant_(variant),
      sampler_((config_.validate(), config_.sampler), hash_combine(seed, std::uint64_t{1})) {}

CoTracker CoTracker::init(FrameSource& source, const TargetState& box, TrackerConfig config,
                          Variant variant, std::uint64_t seed) {
  box.validate();
  const Rect bounds = source.bounds();
  if (!bounds.contains(box.cx, box.cy)) throw PreconditionError("init box outside the frame");
  CoTracker tr(source, std::move(config), variant, seed);
  const TrackerConfig& cfg = tr.config_;
  source.load(0);

  // Seed pool: exact box plus jittered positives, then rings, rescaled boxes
  // and distant samples as negatives.
  std::mt19937_64 rng(hash_combine(seed, std::uint64_t{2}));
  std::uniform_real_distribution<double> jit(-cfg.init.jitter, cfg.init.jitter);
  std::vector<std::pair<TargetState, Label>> pool;
  pool.emplace_back(box, Label::kPositive);
  for (int i = 1; i < cfg.init.positives; ++i) {
    pool.emplace_back(TargetState{box.cx + jit(rng) * box.w, box.cy + jit(rng) * box.h,
                                  box.w * (1.0 + jit(rng) / 2), box.h * (1.0 + jit(rng) / 2)},
                      Label::kPositive);
  }
  for (double r : {0.5, 1.0, 1.5}) {
    for (int a = 0; a < 8; ++a) {
      const double th = a * std::numbers::pi / 4;
      const TargetState s{box.cx + r * box.w * std::cos(th), box.cy + r * box.h * std::sin(th),
                          box.w, box.h};
      if (bounds.contains(s.cx, s.cy)) pool.emplace_back(s, Label::kNegative);
    }
  }
  pool.emplace_back(TargetState{box.cx, box.cy, box.w * 0.5, box.h * 0.5}, Label::kNegative);
  pool.emplace_back(TargetState{box.cx, box.cy, box.w * 2.0, box.h * 2.0}, Label::kNegative);
  {
    SamplerConfig far = cfg.sampler;
    far.n_prime = cfg.init.global_negatives;
    Sampler global(far, hash_combine(seed, std::uint64_t{3}));
    for (const Candidate& c : global.draw_global_background(box, bounds)) {
      pool.emplace_back(c.state, Label::kNegative);
    }
  }

  std::vector<std::vector<double>> raw;
  raw.reserve(pool.size());
  for (const auto& [state, label] : pool) raw.push_back(source.raw_feature(0, state));
  const std::size_t dim = std::min({cfg.feature_dim, source.raw_dim(), raw.size() - 1});
  tr.projector_ = pca_fit(raw, dim);

  LabeledSet seeds;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    seeds.push_back({tr.projector_->project(raw[i]), pool[i].second, 0});
  }

  if (uses_fast(variant)) {
    KnnConfig kc;
    kc.k = cfg.k;
    kc.initial_timer = cfg.alpha0;
    kc.budgeting = variant != Variant::kKnnOnly;
    kc.budget_cap = cfg.budget_cap;
    tr.fast_ = std::make_unique<KnnStore>(dim, kc);
    for (const LabeledSample& s : seeds) tr.fast_->insert(s.feature, s.label, 0);
  }
  if (uses_oracle(variant)) {
    tr.oracle_ = make_oracle(cfg.oracle, source, dim, seed);
    tr.oracle_->retrain(seeds);
  }
  tr.estimate_ = box;
  tr.last_frame_ = 0;
  return tr;
}

FeatureVector CoTracker::feature_of(int t, const TargetState& box) const {
  return projector_->project(source_->raw_feature(t, box));
}

FrameResult CoTracker::step(int t) {
  if (t <= last_frame_) {
    throw PreconditionError(fmt::format("step({}) after frame {}", t, last_frame_));
  }
  FrameResult res;
  res.frame = t;
  const TargetState prev = estimate_;
  last_frame_ = t;

  const Rect bounds = source_->bounds();
  const RegionOfInterest roi = make_roi(prev, source_->motion_hint(t), bounds);
  res.candidates = sampler_.draw_candidates(prev, roi);
  for (Candidate& g : sampler_.draw_global_background(prev, bounds)) {
    res.candidates.push_back(std::move(g));
  }

  try {
    source_->load(t);
    for (Candidate& c : res.candidates) c.feature = feature_of(t, c.state);
  } catch (const std::exception& e) {
    spdlog::warn("frame {}: feature extraction failed ({}); treating as occluded", t, e.what());
    res.candidates.clear();
    res.estimate = prev;
    res.occluded = true;
    res.knn_store_size = fast_ ? fast_->size() : 0;
    return res;
  }

  const std::uint64_t queries_before = oracle_queries();
  res.uncertain = label_candidates(res.candidates, fast_.get(), oracle_.get(), config_, variant_, t);
  res.uncertain_count = res.uncertain.size();
  res.oracle_queries_this_frame = static_cast<std::size_t>(oracle_queries() - queries_before);

  // The oracle keeps everything sampled in the interval and retrains every
  // delta frames.
  if (oracle_) {
    for (const Candidate& c : res.candidates) oracle_->stage({c.feature, *c.label, t});
    if (t % config_.delta == 0) {
      oracle_->commit();
      res.retrained_oracle = true;
    }
  }

  const Localization loc = localize(res.candidates, config_.tau_p, config_.tau_a, prev);
  res.estimate = loc.estimate;
  res.occluded = loc.occluded;
  res.positives = loc.positives;
  res.weight_sum = loc.weight_sum;

  if (fast_) {
    if (!res.occluded) {
      for (std::size_t i : res.uncertain) {
        const Candidate& c = res.candidates[i];
        fast_->insert(c.feature, *c.label, t);
        res.fast_updates.push_back(i);
      }
    }
    fast_->tick();
    fast_->prune();
    res.knn_store_size = fast_->size();
  }

  estimate_ = res.estimate;
  spdlog::trace("frame {}: est=({:.1f},{:.1f},{:.1f},{:.1f}) occ={} |U|={} store={}", t,
                res.estimate.cx, res.estimate.cy, res.estimate.w, res.estimate.h, res.occluded,
                res.uncertain_count, res.knn_store_size);
  return res;
}

}  // namespace ust
