// Shared value types: boxes, feature vectors, candidates and labeled sets.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ust {

/// Violated operation precondition (bad box, dimension mismatch, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure reading or writing an external file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned rectangle in corner form, [x0, x1) x [y0, y1).
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const;
  bool empty() const { return !(x1 > x0 && y1 > y0); }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  Rect intersect(const Rect& other) const;

  bool operator==(const Rect&) const = default;
};

/// Center-based bounding box of the target (or of a candidate).
struct TargetState {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;

  bool valid() const;
  /// Throws PreconditionError unless w, h > 0 and all fields are finite.
  void validate() const;

  Rect rect() const { return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2}; }
  double area() const { return w * h; }

  /// Corner convention used by every file format: (x, y) is the top-left corner.
  static TargetState from_corner(double x, double y, double w, double h);
  struct Corner {
    double x, y, w, h;
  };
  Corner corner() const { return {cx - w / 2, cy - h / 2, w, h}; }

  bool operator==(const TargetState&) const = default;
};

/// Intersection over union of two valid boxes.
double iou(const TargetState& a, const TargetState& b);

/// Fixed-length real feature vector with finite entries.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const double* data() const { return values_.data(); }

  bool operator==(const FeatureVector&) const = default;

 private:
  std::vector<double> values_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

enum class Label : int { kNegative = -1, kPositive = 1 };

/// sign() with the background bias: sign(0) is negative.
inline Label sign_label(double v) { return v > 0.0 ? Label::kPositive : Label::kNegative; }
inline int to_int(Label l) { return static_cast<int>(l); }

enum class LabelSource { kFast, kOracle, kForcedBackground };
std::string_view to_string(LabelSource s);

/// A sampled state with its feature, the fast classifier score, its label and
/// localization weight.
struct Candidate {
  TargetState state;
  FeatureVector feature;
  std::optional<double> score;
  std::optional<Label> label;
  std::optional<double> weight;
  LabelSource labeled_by = LabelSource::kFast;
  bool in_roi = true;
  bool global = false;
};

/// Localization weight: score on positives, zero elsewhere. Negative scores on
/// an oracle-positive candidate clamp to zero.
double importance_weight(double score, Label label);

struct LabeledSample {
  FeatureVector feature;
  Label label;
  int frame;
};

using LabeledSet = std::vector<LabeledSample>;

}  // namespace ust
