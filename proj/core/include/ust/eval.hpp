// Success plots and per-attribute AUC tables.
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ust/core.hpp"

namespace ust {

struct SuccessCurve {
  std::vector<double> thresholds;
  /// Fraction of frames whose IoU with the truth strictly exceeds the threshold.
  std::vector<double> success_rate;
  /// Area under the curve by the left rectangle rule on the grid cells, so
  /// perfect tracking scores exactly 1.
  double auc = 0.0;
};

/// Uniform threshold grid i/(grid_size-1), i = 0..grid_size-1.
std::vector<double> threshold_grid(int grid_size);

/// Throws PreconditionError on length mismatch, empty input or grid_size < 2.
SuccessCurve success_curve(std::span<const TargetState> estimates,
                           std::span<const TargetState> truth, int grid_size = 101);
SuccessCurve success_curve_from_iou(std::span<const double> ious, int grid_size = 101);

/// columns: threshold,success_rate
void write_curve_csv(std::ostream& out, const SuccessCurve& curve);

struct RunRecord {
  std::string scenario;
  std::vector<std::string> tags;
  unsigned long long seed = 0;
  double auc = 0.0;
};

struct AttributeRow {
  std::string attribute;
  double mean_auc = 0.0;
  /// Mean over scenarios of the across-seed variance of the AUC.
  double seed_variance = 0.0;
  int scenarios = 0;
  int runs = 0;
};

/// Runs of one scenario are averaged over seeds first; each tag row is then the
/// mean over the scenarios carrying it. Rows are sorted by tag with "ALL" last.
std::vector<AttributeRow> aggregate(std::span<const RunRecord> runs);

/// columns: attribute,mean_auc,seed_variance,scenarios,runs
void write_attribute_csv(std::ostream& out, std::span<const AttributeRow> rows);

}  // namespace ust
