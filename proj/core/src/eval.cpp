#include "ust/eval.hpp"

#include <map>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace ust {

std::vector<double> threshold_grid(int grid_size) {
  if (grid_size < 2) throw PreconditionError("grid size must be >= 2");
  std::vector<double> g(static_cast<std::size_t>(grid_size));
  for (int i = 0; i < grid_size; ++i) g[i] = static_cast<double>(i) / (grid_size - 1);
  return g;
}

SuccessCurve success_curve_from_iou(std::span<const double> ious, int grid_size) {
  if (ious.empty()) throw PreconditionError("success curve needs at least one frame");
  SuccessCurve c;
  c.thresholds = threshold_grid(grid_size);
  c.success_rate.reserve(c.thresholds.size());
  for (double tau : c.thresholds) {
    std::size_t hits = 0;
    for (double v : ious) hits += v > tau ? 1 : 0;
    c.success_rate.push_back(static_cast<double>(hits) / static_cast<double>(ious.size()));
  }
  // Left rectangle rule over the grid cells: the last gridline (tau = 1) can
  // never be exceeded and only closes the interval.
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < c.success_rate.size(); ++i) total += c.success_rate[i];
  c.auc = total / static_cast<double>(c.success_rate.size() - 1);
  return c;
}

SuccessCurve success_curve(std::span<const TargetState> estimates,
                           std::span<const TargetState> truth, int grid_size) {
  if (estimates.size() != truth.size()) {
    throw PreconditionError(fmt::format("{} estimates for {} truth boxes", estimates.size(),
                                        truth.size()));
  }
  std::vector<double> ious;
  ious.reserve(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) ious.push_back(iou(estimates[i], truth[i]));
  return success_curve_from_iou(ious, grid_size);
}

void write_curve_csv(std::ostream& out, const SuccessCurve& curve) {
  out << "threshold,success_rate\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    fmt::print(out, "{:.4f},{:.9g}\n", curve.thresholds[i], curve.success_rate[i]);
  }
}

std::vector<AttributeRow> aggregate(std::span<const RunRecord> runs) {
  if (runs.empty()) throw PreconditionError("aggregate needs at least one run");
  struct PerScenario {
    std::vector<std::string> tags;
    std::vector<double> aucs;
  };
  std::map<std::string, PerScenario> scenarios;
  for (const RunRecord& r : runs) {
    PerScenario& s = scenarios[r.scenario];
    if (s.aucs.empty()) s.tags = r.tags;
    s.aucs.push_back(r.auc);
  }

  struct Acc {
    double auc = 0, var = 0;
    int scenarios = 0, runs = 0;
  };
  std::map<std::string, Acc> by_tag;
  Acc all;
  for (const auto& [name, s] : scenarios) {
    double mean = 0.0;
    for (double a : s.aucs) mean += a;
    mean /= static_cast<double>(s.aucs.size());
    double var = 0.0;
    for (double a : s.aucs) var += (a - mean) * (a - mean);
    var /= static_cast<double>(s.aucs.size());
    auto add = [&](Acc& acc) {
      acc.auc += mean;
      acc.var += var;
      acc.scenarios += 1;
      acc.runs += static_cast<int>(s.aucs.size());
    };
    for (const std::string& tag : s.tags) {
      if (tag != "ALL") add(by_tag[tag]);
    }
    add(all);
  }

  std::vector<AttributeRow> rows;
  auto emit = [&](const std::string& name, const Acc& a) {
    rows.push_back({name, a.auc / a.scenarios, a.var / a.scenarios, a.scenarios, a.runs});
  };
  for (const auto& [tag, acc] : by_tag) emit(tag, acc);
  emit("ALL", all);
  return rows;
}

void write_attribute_csv(std::ostream& out, std::span<const AttributeRow> rows) {
  out << "attribute,mean_auc,seed_variance,scenarios,runs\n";
  for (const AttributeRow& r : rows) {
    fmt::print(out, "{},{:.9g},{:.9g},{},{}\n", r.attribute, r.mean_auc, r.seed_variance,
               r.scenarios, r.runs);
  }
}

}  // namespace ust
