#include "ust/sampler.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

namespace ust {

void SamplerConfig::validate() const {
  if (n < 1) throw PreconditionError("sampler: n must be >= 1");
  if (n_prime < 0) throw PreconditionError("sampler: n_prime must be >= 0");
  if (!(sigma_cx > 0.0) || !(sigma_cy > 0.0)) throw PreconditionError("sampler: sigmas must be > 0");
  if ((sigma_w && !(*sigma_w > 0.0)) || (sigma_h && !(*sigma_h > 0.0))) {
    throw PreconditionError("sampler: sigmas must be > 0");
  }
  if (!(scale_sigma_fraction > 0.0)) throw PreconditionError("sampler: scale sigma must be > 0");
  if (!(min_extent > 0.0)) throw PreconditionError("sampler: min_extent must be > 0");
}

double SamplerConfig::exclusion_radius() const { return 3.0 * std::max(sigma_cx, sigma_cy); }

bool RegionOfInterest::contains(double x, double y) const {
  return std::any_of(rects.begin(), rects.end(), [&](const Rect& r) { return r.contains(x, y); });
}

RegionOfInterest make_roi(const TargetState& prev, std::span<const Rect> motion_hint,
                          const Rect& frame_bounds) {
  prev.validate();
  if (!frame_bounds.contains(prev.cx, prev.cy)) {
    throw PreconditionError("make_roi: previous target center outside the frame");
  }
  RegionOfInterest roi;
  const TargetState dilated{prev.cx, prev.cy, 2.0 * prev.w, 2.0 * prev.h};
  roi.rects.push_back(dilated.rect().intersect(frame_bounds));
  for (const Rect& r : motion_hint) {
    const Rect clipped = r.intersect(frame_bounds);
    if (!clipped.empty()) roi.rects.push_back(clipped);
  }
  return roi;
}

Sampler::Sampler(SamplerConfig config, std::uint64_t seed) : config_(config), rng_(seed) {
  config_.validate();
}

std::vector<Candidate> Sampler::draw_candidates(const TargetState& prev,
                                                const RegionOfInterest& roi) {
  prev.validate();
  const double sw = config_.sigma_w.value_or(config_.scale_sigma_fraction * prev.w);
  const double sh = config_.sigma_h.value_or(config_.scale_sigma_fraction * prev.h);
  std::normal_distribution<double> gx(prev.cx, config_.sigma_cx);
  std::normal_distribution<double> gy(prev.cy, config_.sigma_cy);
  std::normal_distribution<double> gw(prev.w, sw);
  std::normal_distribution<double> gh(prev.h, sh);

  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(config_.n));
  for (int j = 0; j < config_.n; ++j) {
    Candidate c;
    c.state.cx = gx(rng_);
    c.state.cy = gy(rng_);
    c.state.w = std::max(gw(rng_), config_.min_extent);
    c.state.h = std::max(gh(rng_), config_.min_extent);
    c.in_roi = roi.contains(c.state.cx, c.state.cy);
    if (!c.in_roi) {
      c.label = Label::kNegative;
      c.labeled_by = LabelSource::kForcedBackground;
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Candidate> Sampler::draw_global_background(const TargetState& prev,
                                                       const Rect& frame_bounds) {
  std::vector<Candidate> out;
  if (config_.n_prime == 0) return out;
  prev.validate();

  // Centers keep the whole box inside the frame when it fits.
  const double half_w = std::min(prev.w, frame_bounds.width()) / 2;
  const double half_h = std::min(prev.h, frame_bounds.height()) / 2;
  const Rect centers{frame_bounds.x0 + half_w, frame_bounds.y0 + half_h, frame_bounds.x1 - half_w,
                     frame_bounds.y1 - half_h};
  const double radius = config_.exclusion_radius();
  const double r2 = radius * radius;

  double far2 = 0.0;
  for (double x : {centers.x0, centers.x1}) {
    for (double y : {centers.y0, centers.y1}) {
      far2 = std::max(far2, (x - prev.cx) * (x - prev.cx) + (y - prev.cy) * (y - prev.cy));
    }
  }
  if (far2 <= r2) {
    spdlog::warn("global background: no admissible location farther than {:.1f}px", radius);
    return out;
  }

  std::uniform_real_distribution<double> ux(centers.x0, std::max(centers.x0, centers.x1));
  std::uniform_real_distribution<double> uy(centers.y0, std::max(centers.y0, centers.y1));
  const long max_attempts = 100L * config_.n_prime;
  for (long attempt = 0; attempt < max_attempts && std::ssize(out) < config_.n_prime; ++attempt) {
    const double x = ux(rng_);
    const double y = uy(rng_);
    if ((x - prev.cx) * (x - prev.cx) + (y - prev.cy) * (y - prev.cy) <= r2) continue;
    Candidate c;
    c.state = {x, y, prev.w, prev.h};
    c.in_roi = false;
    c.global = true;
    c.label = Label::kNegative;
    c.labeled_by = LabelSource::kForcedBackground;
    out.push_back(std::move(c));
  }
  if (std::ssize(out) < config_.n_prime) {
    spdlog::warn("global background: {} of {} samples after {} attempts", out.size(),
                 config_.n_prime, max_attempts);
  }
  return out;
}

}  // namespace ust
