#include "ust/core.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace ust {

double Rect::area() const { return empty() ? 0.0 : width() * height(); }

Rect Rect::intersect(const Rect& other) const {
  return {std::max(x0, other.x0), std::max(y0, other.y0), std::min(x1, other.x1),
          std::min(y1, other.y1)};
}

bool TargetState::valid() const {
  return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h) &&
         w > 0.0 && h > 0.0;
}

void TargetState::validate() const {
  if (!valid()) {
    throw PreconditionError(
        fmt::format("invalid box (cx={}, cy={}, w={}, h={})", cx, cy, w, h));
  }
}

TargetState TargetState::from_corner(double x, double y, double w, double h) {
  TargetState s{x + w / 2, y + h / 2, w, h};
  s.validate();
  return s;
}

double iou(const TargetState& a, const TargetState& b) {
  a.validate();
  b.validate();
  const double inter = a.rect().intersect(b.rect()).area();
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw PreconditionError("feature vector has a non-finite entry");
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::kFast:
      return "fast";
    case LabelSource::kOracle:
      return "oracle";
    case LabelSource::kForcedBackground:
      return "forced-background";
  }
  return "?";
}

double importance_weight(double score, Label label) {
  return label == Label::kPositive ? std::max(score, 0.0) : 0.0;
}

}  // namespace ust
