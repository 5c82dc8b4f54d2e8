// Frame sources backed by PPM image directories.
#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "ust/features.hpp"
#include "ust/frame_source.hpp"
#include "ust/simulator.hpp"

namespace ust {

/// Directory of frame_000000.ppm, frame_000001.ppm, ... with an optional
/// groundtruth.txt ("x,y,w,h" per frame). Raw features are joint color
/// histograms of the box; the motion hint is the bounding box of pixels that
/// changed since the previous frame.
class ImageSequence final : public FrameSource {
 public:
  explicit ImageSequence(std::filesystem::path dir, int histogram_bins = 4,
                         double motion_threshold = 0.1);

  static std::filesystem::path frame_path(const std::filesystem::path& dir, int t);

  const std::filesystem::path& dir() const { return dir_; }
  bool has_ground_truth() const { return !truth_.empty(); }
  const std::vector<TargetState>& ground_truth() const { return truth_; }

  int frame_count() const override { return frame_count_; }
  Rect bounds() const override;
  std::size_t raw_dim() const override;
  /// Reads frame t (and keeps the previous one for the motion hint).
  void load(int t) override;
  std::vector<double> raw_feature(int t, const TargetState& box) const override;
  std::vector<Rect> motion_hint(int t) const override;
  std::optional<GroundTruthFrame> truth(int t) const override;

 private:
  std::filesystem::path dir_;
  int bins_;
  double motion_threshold_;
  int frame_count_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<TargetState> truth_;
  int current_t_ = -1;
  Image current_;
  int previous_t_ = -1;
  Image previous_;
};

/// Renders every frame of the scenario into `dir` plus groundtruth.txt.
void write_sequence(const Scenario& scenario, const std::filesystem::path& dir);

}  // namespace ust
