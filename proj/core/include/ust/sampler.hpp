// Per-frame candidate generation: local Gaussian samples around the previous
// target inside a region of interest, plus distant global-background samples.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ust/core.hpp"

namespace ust {

struct SamplerConfig {
  int n = 300;
  int n_prime = 30;
  double sigma_cx = 6.0;  // pixels
  double sigma_cy = 6.0;
  /// Explicit width/height sigmas in pixels; when unset they are
  /// `scale_sigma_fraction` of the previous box extent.
  std::optional<double> sigma_w;
  std::optional<double> sigma_h;
  double scale_sigma_fraction = 0.05;
  double min_extent = 1.0;

  void validate() const;
  /// max(sigma_cx, sigma_cy) * 3: global samples stay farther than this.
  double exclusion_radius() const;
};

/// Union of rectangles; always contains the previous target center.
struct RegionOfInterest {
  std::vector<Rect> rects;
  bool contains(double x, double y) const;
};

/// Dilates `prev` to twice its extent, unions it with the motion hint and
/// clips everything to the frame.
RegionOfInterest make_roi(const TargetState& prev, std::span<const Rect> motion_hint,
                          const Rect& frame_bounds);

class Sampler {
 public:
  Sampler(SamplerConfig config, std::uint64_t seed);

  const SamplerConfig& config() const { return config_; }

  /// n draws from N(prev, diag(sigma^2)); out-of-ROI draws come back labeled
  /// negative (local background) and are never scored.
  std::vector<Candidate> draw_candidates(const TargetState& prev, const RegionOfInterest& roi);

  /// n' uniform draws whose centers lie farther than the exclusion radius from
  /// prev; labeled negative, forced-background. Returns fewer (possibly none)
  /// when the admissible region is too small.
  std::vector<Candidate> draw_global_background(const TargetState& prev, const Rect& frame_bounds);

 private:
  SamplerConfig config_;
  std::mt19937_64 rng_;
};

}  // namespace ust
