// Patch features: color histograms, binary PPM frames and the PCA projector.
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ust/core.hpp"

namespace ust {

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

/// Row-major H x W grid of colors with channels in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const Rgb& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const Rgb> pixels() const { return pixels_; }

  /// Pixels whose centers fall inside `box`, clipped to the image.
  Image crop(const TargetState& box) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

/// Binary P6 PPM, maxval 255.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& image);

/// Joint RGB histogram with bins_per_channel^3 entries, L1-normalized.
std::vector<double> color_histogram(const Image& patch, int bins_per_channel);

/// Frozen PCA projection: y = basis^T (x - mean).
class FeatureProjector {
 public:
  FeatureProjector(Eigen::VectorXd mean, Eigen::MatrixXd basis, Eigen::VectorXd explained);

  std::size_t input_dim() const { return static_cast<std::size_t>(basis_.rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(basis_.cols()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  /// Variance captured by each component, non-increasing.
  const Eigen::VectorXd& explained_variance() const { return explained_; }

  FeatureVector project(std::span<const double> x) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd explained_;
};

/// Fits the top-`target_dim` principal directions of `data` (all rows of equal
/// length D). Needs at least target_dim + 1 samples and target_dim <= D.
FeatureProjector pca_fit(std::span<const std::vector<double>> data, std::size_t target_dim);

inline FeatureVector project(const FeatureProjector& p, std::span<const double> x) {
  return p.project(x);
}

}  // namespace ust
