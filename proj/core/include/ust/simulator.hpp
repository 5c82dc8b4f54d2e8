// Deterministic synthetic tracking scenarios.
//
// A scenario is a ground-truth target path over a virtual frame plus a
// feature field: querying any box returns a convex blend of the signatures of
// the objects it overlaps (weighted by IoU with each object) and of the local
// background, plus positional noise derived from a hash of (seed, frame, box).
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ust/core.hpp"
#include "ust/features.hpp"
#include "ust/frame_source.hpp"
#include "ust/oracle.hpp"

namespace ust {

struct Waypoint {
  int frame = 0;
  TargetState box;
};

/// Piecewise-linear path through keyframed boxes; constant before the first
/// and after the last waypoint.
struct ObjectPath {
  std::vector<Waypoint> waypoints;

  TargetState at(int t) const;
};

struct DistractorSpec {
  ObjectPath path;
  /// 0: background-like, 1: identical to the target signature.
  double similarity = 0.9;
};

/// Inclusive frame interval during which the target is fully hidden.
struct OcclusionSpec {
  int first = 0;
  int last = 0;
  bool contains(int t) const { return t >= first && t <= last; }
};

struct ScenarioSpec {
  std::string name;
  std::vector<std::string> tags;
  int frame_count = 0;
  double width = 480.0;
  double height = 360.0;
  ObjectPath target;
  std::vector<DistractorSpec> distractors;
  std::vector<OcclusionSpec> occlusions;
  std::size_t feature_dim = 20;
  /// Norm of a random signature vector.
  double signature_scale = 1.5;
  /// Target signature displacement per frame along a fixed random direction.
  double drift_rate = 0.0;
  double noise_std = 0.02;
  /// Amplitude of the spatial variation of the background signature.
  double background_variation = 0.3;
  std::uint64_t seed = 1;

  void validate() const;
};

class Scenario;

struct FrameHandle {
  const Scenario* scenario = nullptr;
  int t = 0;

  FeatureVector feature_at(const TargetState& box) const;
  GroundTruthFrame ground_truth() const;
};

class Scenario final : public FrameSource {
 public:
  explicit Scenario(ScenarioSpec spec);

  const ScenarioSpec& spec() const { return spec_; }
  FrameHandle frame(int t) const;

  FeatureVector feature_at(int t, const TargetState& box) const;
  GroundTruthFrame ground_truth(int t) const;
  /// Blend weights (target, distractors..., background) for `box`; sums to 1.
  std::vector<double> blend_weights(int t, const TargetState& box) const;

  Eigen::VectorXd target_signature(int t) const;
  Eigen::VectorXd background_signature() const { return background_; }
  Eigen::VectorXd background_at(double x, double y) const;
  Eigen::VectorXd distractor_signature(std::size_t i, int t) const;
  const Eigen::VectorXd& occluder_signature() const { return occluder_; }
  TargetState distractor_box(std::size_t i, int t) const;
  bool occluded(int t) const;

  /// Renders frame t as an image: textured background, two-tone objects, a
  /// flat occluder over the target during occlusions.
  Image render(int t) const;

  // FrameSource
  int frame_count() const override { return spec_.frame_count; }
  Rect bounds() const override { return {0.0, 0.0, spec_.width, spec_.height}; }
  std::size_t raw_dim() const override { return spec_.feature_dim; }
  std::vector<double> raw_feature(int t, const TargetState& box) const override;
  std::vector<Rect> motion_hint(int t) const override;
  std::optional<GroundTruthFrame> truth(int t) const override { return ground_truth(t); }

 private:
  void check_frame(int t) const;

  ScenarioSpec spec_;
  Eigen::VectorXd target0_;
  Eigen::VectorXd drift_dir_;
  Eigen::VectorXd background_;
  Eigen::VectorXd occluder_;
  struct Wave {
    Eigen::VectorXd amplitude;
    double fx, fy, phase;
  };
  std::vector<Wave> waves_;
};

/// Built-in scenario catalog: plain, distractor-cross, occlusion, drift,
/// fast-motion.
std::vector<ScenarioSpec> builtin_scenarios();
/// Throws PreconditionError for unknown names.
ScenarioSpec builtin_scenario(const std::string& name);

/// Plays the scenario forward and backward until it spans `frame_count`
/// frames. Paths are resampled every frame; occlusions follow the mapped
/// frames.
ScenarioSpec extended(const ScenarioSpec& spec, int frame_count);

}  // namespace ust
