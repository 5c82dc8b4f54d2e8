// Seeded runs and the ablation bench: drives trackers over frame sources and
// writes traces, success curves and summaries.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ust/cotracker.hpp"
#include "ust/eval.hpp"
#include "ust/frame_source.hpp"

namespace ust {

/// "A..B" (inclusive), "A" or "a,b,c". Throws PreconditionError.
std::vector<std::uint64_t> parse_seeds(std::string_view text);

struct RunManifest {
  /// Exactly one source: a built-in scenario, a scenario file or a PPM
  /// sequence directory.
  std::optional<std::string> scenario;
  std::optional<std::filesystem::path> scenario_file;
  std::optional<std::filesystem::path> sequence;
  Variant variant = Variant::kUst;
  TrackerConfig config;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path out_dir = "out";
  int grid = 101;
  /// Also write the final fast-classifier store of every seed.
  bool dump_store = false;

  void validate() const;
};

struct SeedResult {
  std::uint64_t seed = 0;
  int frames = 0;
  std::optional<SuccessCurve> curve;  // absent without ground truth
  std::uint64_t oracle_queries = 0;
  std::size_t final_store_size = 0;
  int occluded_frames = 0;
  std::vector<TargetState> estimates;
  /// Wall-clock seconds of the step loop only.
  double step_seconds = 0.0;
};

struct RunResult {
  std::string source;
  std::vector<std::string> tags;
  Variant variant = Variant::kUst;
  std::vector<SeedResult> seeds;

  std::optional<double> mean_auc() const;
  double mean_fps() const;
};

/// Tracks one seed over the whole source starting from `init`. Writes the
/// per-frame trace when `trace` is given.
SeedResult track(FrameSource& source, const TargetState& init, const TrackerConfig& config,
                 Variant variant, std::uint64_t seed, int grid, std::ostream* trace = nullptr,
                 std::ostream* store_dump = nullptr);

/// Runs every seed and writes, under out_dir/<source>/<variant>/:
/// seed_<s>/{trace.csv, curve.csv, summary.json[, store.csv]}, the
/// seed-averaged summary.json, and timing.txt (wall-clock figures, kept apart
/// so the CSV/JSON artifacts are reproducible).
RunResult run(const RunManifest& manifest);

struct BenchManifest {
  std::vector<std::string> scenarios;  // empty: every built-in scenario
  std::vector<Variant> variants;       // empty: every variant
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  TrackerConfig config;
  std::filesystem::path out_dir = "bench";
  int grid = 101;
};

struct BenchResult {
  std::vector<RunResult> runs;
  /// One table per variant, in manifest order.
  std::vector<std::pair<Variant, std::vector<AttributeRow>>> tables;
};

/// Runs scenarios x variants x seeds into out_dir/runs/ and writes
/// attribute_table.csv / attribute_table.json (one row per attribute plus
/// ALL, per variant) and timing.txt.
BenchResult bench(const BenchManifest& manifest);

}  // namespace ust
