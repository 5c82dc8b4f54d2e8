#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ust/core.hpp"
#include "ust/oracle.hpp"

namespace ust {

/// A frame sequence the tracker can pull patch features from.
class FrameSource {
 public:
  virtual ~FrameSource() = default;

  virtual int frame_count() const = 0;
  virtual Rect bounds() const = 0;
  /// Length of raw_feature() vectors, before projection.
  virtual std::size_t raw_dim() const = 0;
  /// Makes frame t current. Sources backed by files load it here; failures
  /// throw.
  virtual void load(int /*t*/) {}
  virtual std::vector<double> raw_feature(int t, const TargetState& box) const = 0;
  /// Regions where something moved between t-1 and t.
  virtual std::vector<Rect> motion_hint(int /*t*/) const { return {}; }
  /// Ground truth when the source knows it.
  virtual std::optional<GroundTruthFrame> truth(int /*t*/) const { return std::nullopt; }
};

}  // namespace ust
