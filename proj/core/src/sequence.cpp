#include "ust/sequence.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "ust/io.hpp"

namespace ust {

ImageSequence::ImageSequence(std::filesystem::path dir, int histogram_bins,
                             double motion_threshold)
    : dir_(std::move(dir)), bins_(histogram_bins), motion_threshold_(motion_threshold) {
  if (bins_ < 2) throw PreconditionError("histogram bins must be >= 2");
  if (!std::filesystem::is_directory(dir_)) {
    throw IoError(fmt::format("{} is not a directory", dir_.string()));
  }
  while (std::filesystem::exists(frame_path(dir_, frame_count_))) ++frame_count_;
  if (frame_count_ == 0) {
    throw IoError(fmt::format("no frames in {} (expected frame_000000.ppm)", dir_.string()));
  }
  const Image first = read_ppm(frame_path(dir_, 0));
  width_ = first.width();
  height_ = first.height();
  const auto gt = dir_ / "groundtruth.txt";
  if (std::filesystem::exists(gt)) {
    truth_ = read_ground_truth(gt);
    if (static_cast<int>(truth_.size()) < frame_count_) {
      throw IoError(fmt::format("{} has {} boxes for {} frames", gt.string(), truth_.size(),
                                frame_count_));
    }
  }
}

std::filesystem::path ImageSequence::frame_path(const std::filesystem::path& dir, int t) {
  return dir / fmt::format("frame_{:06d}.ppm", t);
}

Rect ImageSequence::bounds() const {
  return {0.0, 0.0, static_cast<double>(width_), static_cast<double>(height_)};
}

std::size_t ImageSequence::raw_dim() const {
  return static_cast<std::size_t>(bins_) * static_cast<std::size_t>(bins_) *
         static_cast<std::size_t>(bins_);
}

void ImageSequence::load(int t) {
  if (t < 0 || t >= frame_count_) throw PreconditionError(fmt::format("frame {} out of range", t));
  if (t == current_t_) return;
  Image next = read_ppm(frame_path(dir_, t));
  if (next.width() != width_ || next.height() != height_) {
    throw IoError(fmt::format("frame {} has size {}x{}, expected {}x{}", t, next.width(),
                              next.height(), width_, height_));
  }
  if (current_t_ == t - 1) {
    previous_ = std::move(current_);
    previous_t_ = current_t_;
  } else if (t > 0) {
    previous_ = read_ppm(frame_path(dir_, t - 1));
    previous_t_ = t - 1;
  }
  current_ = std::move(next);
  current_t_ = t;
}

std::vector<double> ImageSequence::raw_feature(int t, const TargetState& box) const {
  if (t != current_t_) throw PreconditionError(fmt::format("frame {} is not loaded", t));
  const Image patch = current_.crop(box);
  if (patch.empty()) {
    // Boxes entirely off-image describe nothing; treat them as a uniform patch.
    return std::vector<double>(raw_dim(), 1.0 / static_cast<double>(raw_dim()));
  }
  return color_histogram(patch, bins_);
}

std::vector<Rect> ImageSequence::motion_hint(int t) const {
  if (t != current_t_ || previous_t_ != t - 1 || t == 0) return {};
  int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const Rgb& a = current_.at(x, y);
      const Rgb& b = previous_.at(x, y);
      const double diff = std::abs(a.r - b.r) + std::abs(a.g - b.g) + std::abs(a.b - b.b);
      if (diff > motion_threshold_) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) return {};
  return {Rect{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 + 1),
               static_cast<double>(y1 + 1)}};
}

std::optional<GroundTruthFrame> ImageSequence::truth(int t) const {
  if (truth_.empty()) return std::nullopt;
  if (t < 0 || t >= frame_count_) throw PreconditionError(fmt::format("frame {} out of range", t));
  return GroundTruthFrame{truth_[static_cast<std::size_t>(t)], false};
}

void write_sequence(const Scenario& scenario, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<TargetState> boxes;
  for (int t = 0; t < scenario.frame_count(); ++t) {
    write_ppm(ImageSequence::frame_path(dir, t), scenario.render(t));
    boxes.push_back(scenario.ground_truth(t).box);
  }
  std::ofstream gt(dir / "groundtruth.txt");
  if (!gt) throw IoError(fmt::format("cannot write {}", (dir / "groundtruth.txt").string()));
  write_ground_truth(gt, boxes);
}

}  // namespace ust
