#include "ust/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "ust/hash.hpp"

namespace ust {

namespace {

Eigen::VectorXd random_signature(std::mt19937_64& rng, std::size_t dim, double norm) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
  return v * (norm / std::sqrt(static_cast<double>(dim)));
}

TargetState lerp(const TargetState& a, const TargetState& b, double u) {
  return {a.cx + u * (b.cx - a.cx), a.cy + u * (b.cy - a.cy), a.w + u * (b.w - a.w),
          a.h + u * (b.h - a.h)};
}

// Box clipped to the frame; nullopt when nothing of it is inside.
std::optional<TargetState> clip_box(const TargetState& box, const Rect& bounds) {
  const Rect r = box.rect().intersect(bounds);
  if (r.empty()) return std::nullopt;
  return TargetState{(r.x0 + r.x1) / 2, (r.y0 + r.y1) / 2, r.width(), r.height()};
}

Rgb mix(const Rgb& a, const Rgb& b, double u) {
  return {a.r + u * (b.r - a.r), a.g + u * (b.g - a.g), a.b + u * (b.b - a.b)};
}

}  // namespace

TargetState ObjectPath::at(int t) const {
  if (waypoints.empty()) throw PreconditionError("object path without waypoints");
  if (t <= waypoints.front().frame) return waypoints.front().box;
  if (t >= waypoints.back().frame) return waypoints.back().box;
  auto hi = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                             [](int f, const Waypoint& w) { return f < w.frame; });
  auto lo = hi - 1;
  const double u = static_cast<double>(t - lo->frame) / (hi->frame - lo->frame);
  return lerp(lo->box, hi->box, u);
}

void ScenarioSpec::validate() const {
  if (frame_count < 2) throw PreconditionError("scenario needs at least 2 frames");
  if (!(width > 0) || !(height > 0)) throw PreconditionError("scenario frame must be non-empty");
  if (feature_dim == 0) throw PreconditionError("scenario feature_dim must be positive");
  if (noise_std < 0 || drift_rate < 0 || background_variation < 0 || !(signature_scale > 0)) {
    throw PreconditionError("scenario magnitudes must be non-negative");
  }
  auto check_path = [](const ObjectPath& p, const char* what) {
    if (p.waypoints.empty()) throw PreconditionError(fmt::format("{} path is empty", what));
    for (std::size_t i = 0; i < p.waypoints.size(); ++i) {
      p.waypoints[i].box.validate();
      if (i > 0 && p.waypoints[i].frame <= p.waypoints[i - 1].frame) {
        throw PreconditionError(fmt::format("{} waypoints must have increasing frames", what));
      }
    }
  };
  check_path(target, "target");
  for (const auto& d : distractors) {
    check_path(d.path, "distractor");
    if (!(d.similarity >= 0.0 && d.similarity <= 1.0)) {
      throw PreconditionError("distractor similarity must lie in [0, 1]");
    }
  }
  for (const auto& o : occlusions) {
    if (o.first > o.last || o.first < 0) throw PreconditionError("bad occlusion interval");
  }
  const Rect frame{0, 0, width, height};
  for (int t = 0; t < frame_count; ++t) {
    const bool hidden = std::any_of(occlusions.begin(), occlusions.end(),
                                    [t](const OcclusionSpec& o) { return o.contains(t); });
    if (hidden) continue;
    const Rect r = target.at(t).rect();
    if (r.x0 < frame.x0 || r.y0 < frame.y0 || r.x1 > frame.x1 || r.y1 > frame.y1) {
      throw PreconditionError(fmt::format("target leaves the frame at t={}", t));
    }
  }
}

FeatureVector FrameHandle::feature_at(const TargetState& box) const {
  return scenario->feature_at(t, box);
}

GroundTruthFrame FrameHandle::ground_truth() const { return scenario->ground_truth(t); }

Scenario::Scenario(ScenarioSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::mt19937_64 rng(hash_combine(spec_.seed, std::uint64_t{0x5ce9a210}));
  const std::size_t d = spec_.feature_dim;
  target0_ = random_signature(rng, d, spec_.signature_scale);
  background_ = random_signature(rng, d, spec_.signature_scale);
  occluder_ = random_signature(rng, d, spec_.signature_scale);
  drift_dir_ = random_signature(rng, d, 1.0);
  drift_dir_.normalize();
  std::uniform_real_distribution<double> freq(0.5, 2.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int j = 0; j < 3; ++j) {
    Wave w;
    w.amplitude = random_signature(rng, d, spec_.background_variation / std::sqrt(3.0));
    w.fx = freq(rng);
    w.fy = freq(rng);
    w.phase = phase(rng);
    waves_.push_back(std::move(w));
  }
}

void Scenario::check_frame(int t) const {
  if (t < 0 || t >= spec_.frame_count) {
    throw PreconditionError(fmt::format("frame {} outside [0, {})", t, spec_.frame_count));
  }
}

FrameHandle Scenario::frame(int t) const {
  check_frame(t);
  return {this, t};
}

bool Scenario::occluded(int t) const {
  return std::any_of(spec_.occlusions.begin(), spec_.occlusions.end(),
                     [t](const OcclusionSpec& o) { return o.contains(t); });
}

Eigen::VectorXd Scenario::target_signature(int t) const {
  return target0_ + (spec_.drift_rate * t) * drift_dir_;
}

Eigen::VectorXd Scenario::background_at(double x, double y) const {
  Eigen::VectorXd v = background_;
  for (const Wave& w : waves_) {
    const double arg =
        2.0 * std::numbers::pi * (w.fx * x / spec_.width + w.fy * y / spec_.height) + w.phase;
    v += std::sin(arg) * w.amplitude;
  }
  return v;
}

Eigen::VectorXd Scenario::distractor_signature(std::size_t i, int t) const {
  const double s = spec_.distractors.at(i).similarity;
  return s * target_signature(t) + (1.0 - s) * background_;
}

TargetState Scenario::distractor_box(std::size_t i, int t) const {
  return spec_.distractors.at(i).path.at(t);
}

GroundTruthFrame Scenario::ground_truth(int t) const {
  check_frame(t);
  return {spec_.target.at(t), occluded(t)};
}

std::vector<double> Scenario::blend_weights(int t, const TargetState& box) const {
  check_frame(t);
  box.validate();
  std::vector<double> w(spec_.distractors.size() + 2, 0.0);
  const auto clipped = clip_box(box, bounds());
  if (!clipped) {
    w.back() = 1.0;
    return w;
  }
  double total = 0.0;
  w[0] = iou(*clipped, spec_.target.at(t));
  total += w[0];
  for (std::size_t i = 0; i < spec_.distractors.size(); ++i) {
    w[i + 1] = iou(*clipped, distractor_box(i, t));
    total += w[i + 1];
  }
  if (total > 1.0) {
    for (double& v : w) v /= total;
    total = 1.0;
  }
  w.back() = 1.0 - total;
  return w;
}

FeatureVector Scenario::feature_at(int t, const TargetState& box) const {
  const std::vector<double> w = blend_weights(t, box);
  const auto clipped = clip_box(box, bounds());
  const double x = clipped ? clipped->cx : std::clamp(box.cx, 0.0, spec_.width);
  const double y = clipped ? clipped->cy : std::clamp(box.cy, 0.0, spec_.height);

  Eigen::VectorXd f = w.back() * background_at(x, y);
  if (w[0] > 0.0) f += w[0] * (occluded(t) ? occluder_ : target_signature(t));
  for (std::size_t i = 0; i < spec_.distractors.size(); ++i) {
    if (w[i + 1] > 0.0) f += w[i + 1] * distractor_signature(i, t);
  }

  if (spec_.noise_std > 0.0) {
    std::uint64_t h = hash_combine(spec_.seed, static_cast<std::uint64_t>(t));
    h = hash_combine(h, box.cx);
    h = hash_combine(h, box.cy);
    h = hash_combine(h, box.w);
    h = hash_combine(h, box.h);
    // Box-Muller over a splitmix stream keyed by the query.
    for (Eigen::Index i = 0; i < f.size(); i += 2) {
      h = splitmix64(h);
      const double u1 = std::max(unit_interval(h), 1e-300);
      h = splitmix64(h);
      const double u2 = unit_interval(h);
      const double r = spec_.noise_std * std::sqrt(-2.0 * std::log(u1));
      f(i) += r * std::cos(2.0 * std::numbers::pi * u2);
      if (i + 1 < f.size()) f(i + 1) += r * std::sin(2.0 * std::numbers::pi * u2);
    }
  }
  return FeatureVector(std::vector<double>(f.data(), f.data() + f.size()));
}

std::vector<double> Scenario::raw_feature(int t, const TargetState& box) const {
  const FeatureVector f = feature_at(t, box);
  return {f.values().begin(), f.values().end()};
}

std::vector<Rect> Scenario::motion_hint(int t) const {
  check_frame(t);
  std::vector<Rect> out;
  if (t == 0) return out;
  auto moved = [&](const TargetState& a, const TargetState& b) {
    if (a == b) return;
    const Rect ra = a.rect(), rb = b.rect();
    out.push_back({std::min(ra.x0, rb.x0), std::min(ra.y0, rb.y0), std::max(ra.x1, rb.x1),
                   std::max(ra.y1, rb.y1)});
  };
  moved(spec_.target.at(t - 1), spec_.target.at(t));
  for (std::size_t i = 0; i < spec_.distractors.size(); ++i) {
    moved(distractor_box(i, t - 1), distractor_box(i, t));
  }
  return out;
}

Image Scenario::render(int t) const {
  check_frame(t);
  const int W = static_cast<int>(std::lround(spec_.width));
  const int H = static_cast<int>(std::lround(spec_.height));
  std::mt19937_64 rng(hash_combine(spec_.seed, std::uint64_t{0xc0104}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Rgb bg_a{0.15 + 0.2 * u(rng), 0.45 + 0.2 * u(rng), 0.35 + 0.2 * u(rng)};
  const Rgb bg_b{0.1 + 0.2 * u(rng), 0.2 + 0.2 * u(rng), 0.6 + 0.2 * u(rng)};
  const Rgb tgt_a{0.85 + 0.1 * u(rng), 0.2 + 0.1 * u(rng), 0.1 + 0.1 * u(rng)};
  const Rgb tgt_b{0.9 + 0.1 * u(rng), 0.8 + 0.1 * u(rng), 0.2 + 0.1 * u(rng)};
  const Rgb occ{0.5, 0.5, 0.5};
  const double fx = 1.0 + 2.0 * u(rng), fy = 1.0 + 2.0 * u(rng);

  Image img(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double s = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (fx * x / W + fy * y / H));
      img.at(x, y) = mix(bg_a, bg_b, s);
    }
  }
  // Two-tone objects: upper half color a, lower half color b.
  auto paint = [&](const TargetState& box, const Rgb& a, const Rgb& b) {
    const Rect r = box.rect().intersect(bounds());
    const int x0 = static_cast<int>(std::ceil(r.x0 - 0.5)), x1 = static_cast<int>(std::ceil(r.x1 - 0.5));
    const int y0 = static_cast<int>(std::ceil(r.y0 - 0.5)), y1 = static_cast<int>(std::ceil(r.y1 - 0.5));
    for (int y = std::max(y0, 0); y < std::min(y1, H); ++y) {
      for (int x = std::max(x0, 0); x < std::min(x1, W); ++x) {
        img.at(x, y) = (y + 0.5 < box.cy) ? a : b;
      }
    }
  };
  for (std::size_t i = 0; i < spec_.distractors.size(); ++i) {
    const double s = spec_.distractors[i].similarity;
    paint(distractor_box(i, t), mix(bg_a, tgt_a, s), mix(bg_b, tgt_b, s));
  }
  if (occluded(t)) {
    paint(spec_.target.at(t), occ, occ);
  } else {
    paint(spec_.target.at(t), tgt_a, tgt_b);
  }
  if (spec_.noise_std > 0.0) {
    std::uint64_t h = hash_combine(spec_.seed, static_cast<std::uint64_t>(t) + 0x1000);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        Rgb& p = img.at(x, y);
        h = splitmix64(h);
        const double n = (unit_interval(h) - 0.5) * 2.0 * spec_.noise_std;
        p = {std::clamp(p.r + n, 0.0, 1.0), std::clamp(p.g + n, 0.0, 1.0),
             std::clamp(p.b + n, 0.0, 1.0)};
      }
    }
  }
  return img;
}

namespace {

ScenarioSpec base_spec(std::string name, std::vector<std::string> tags, int frames,
                       std::uint64_t seed) {
  ScenarioSpec s;
  s.name = std::move(name);
  s.tags = std::move(tags);
  s.frame_count = frames;
  s.seed = seed;
  return s;
}

// Samples a parametric path every `step` frames.
template <class F>
ObjectPath sampled_path(int frames, int step, F&& f) {
  ObjectPath p;
  for (int t = 0; t < frames; t += step) p.waypoints.push_back({t, f(t)});
  if (p.waypoints.back().frame != frames - 1) p.waypoints.push_back({frames - 1, f(frames - 1)});
  return p;
}

constexpr double kTargetW = 40.0;
constexpr double kTargetH = 56.0;

}  // namespace

std::vector<ScenarioSpec> builtin_scenarios() {
  using std::numbers::pi;
  std::vector<ScenarioSpec> out;

  {
    auto s = base_spec("plain", {"plain"}, 300, 11);
    s.target = sampled_path(300, 5, [](int t) {
      return TargetState{240.0 + 90.0 * std::sin(2 * pi * t / 300.0),
                         180.0 + 50.0 * std::sin(4 * pi * t / 300.0), kTargetW, kTargetH};
    });
    out.push_back(std::move(s));
  }
  {
    auto s = base_spec("distractor-cross", {"distractor"}, 300, 23);
    s.target = sampled_path(300, 5, [](int t) {
      return TargetState{100.0 + 280.0 * t / 300.0, 180.0 + 20.0 * std::sin(2 * pi * t / 150.0),
                         kTargetW, kTargetH};
    });
    DistractorSpec d;
    d.similarity = 0.9;
    // Mirror path: centers coincide at frame 150 (cx = 240, sin term zero).
    d.path = sampled_path(300, 5, [](int t) {
      return TargetState{380.0 - 280.0 * t / 300.0, 180.0 - 20.0 * std::sin(2 * pi * t / 150.0),
                         kTargetW, kTargetH};
    });
    s.distractors.push_back(std::move(d));
    out.push_back(std::move(s));
  }
  {
    auto s = base_spec("occlusion", {"occlusion"}, 300, 37);
    // The target crawls while hidden, so it reappears close to where it
    // vanished.
    auto box = [](double cx, double cy) { return TargetState{cx, cy, kTargetW, kTargetH}; };
    s.target.waypoints = {{0, box(150, 150)},   {70, box(250, 190)},  {90, box(253, 191)},
                          {180, box(330, 150)}, {200, box(333, 149)}, {299, box(220, 200)}};
    s.occlusions = {{70, 90}, {180, 200}};
    out.push_back(std::move(s));
  }
  {
    auto s = base_spec("drift", {"deformation"}, 300, 41);
    s.target = sampled_path(300, 5, [](int t) {
      return TargetState{240.0 - 80.0 * std::sin(2 * pi * t / 300.0),
                         180.0 + 40.0 * std::sin(4 * pi * t / 300.0), kTargetW, kTargetH};
    });
    // Over the sequence the target signature moves about as far as the
    // target-background gap.
    s.drift_rate = 2.0 / 300.0;
    out.push_back(std::move(s));
  }
  {
    auto s = base_spec("fast-motion", {"fast-motion"}, 300, 53);
    // Back-and-forth sweeps at 5 px/frame.
    s.target = sampled_path(300, 1, [](int t) {
      const double period = 60.0;
      const double phase = std::fmod(t, 2 * period);
      const double x = phase < period ? phase : 2 * period - phase;
      return TargetState{90.0 + 5.0 * x, 180.0 + 40.0 * std::sin(2 * pi * t / 100.0), kTargetW,
                         kTargetH};
    });
    out.push_back(std::move(s));
  }
  return out;
}

ScenarioSpec extended(const ScenarioSpec& spec, int frame_count) {
  spec.validate();
  if (frame_count < 1) throw PreconditionError("frame count must be positive");
  const int n = spec.frame_count;
  auto source_frame = [n](int t) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    const int r = t % period;
    return r < n ? r : period - r;
  };
  auto remap = [&](const ObjectPath& p) {
    ObjectPath out;
    out.waypoints.reserve(static_cast<std::size_t>(frame_count));
    for (int t = 0; t < frame_count; ++t) out.waypoints.push_back({t, p.at(source_frame(t))});
    return out;
  };
  ScenarioSpec out = spec;
  out.frame_count = frame_count;
  out.target = remap(spec.target);
  for (std::size_t i = 0; i < spec.distractors.size(); ++i) {
    out.distractors[i].path = remap(spec.distractors[i].path);
  }
  out.occlusions.clear();
  for (int t = 0; t < frame_count; ++t) {
    const int src = source_frame(t);
    const bool hidden = std::any_of(spec.occlusions.begin(), spec.occlusions.end(),
                                    [src](const OcclusionSpec& o) { return o.contains(src); });
    if (!hidden) continue;
    if (!out.occlusions.empty() && out.occlusions.back().last == t - 1) {
      out.occlusions.back().last = t;
    } else {
      out.occlusions.push_back({t, t});
    }
  }
  return out;
}

ScenarioSpec builtin_scenario(const std::string& name) {
  for (auto& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  throw PreconditionError(fmt::format("unknown scenario '{}'", name));
}

}  // namespace ust
