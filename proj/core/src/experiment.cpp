#include "ust/experiment.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ust/io.hpp"
#include "ust/sequence.hpp"
#include "ust/simulator.hpp"

namespace ust {

namespace {

using nlohmann::ordered_json;

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw PreconditionError(fmt::format("bad seed '{}'", s));
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  return out;
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError(fmt::format("write failed: {}", path.string()));
}

ordered_json rows_json(std::span<const AttributeRow> rows) {
  ordered_json arr = ordered_json::array();
  for (const AttributeRow& r : rows) {
    arr.push_back({{"attribute", r.attribute},
                   {"mean_auc", r.mean_auc},
                   {"seed_variance", r.seed_variance},
                   {"scenarios", r.scenarios},
                   {"runs", r.runs}});
  }
  return arr;
}

// A loaded source plus what the run needs to know about it.
struct LoadedSource {
  std::string name;
  std::vector<std::string> tags;
  std::unique_ptr<FrameSource> source;
  TargetState init;
};

LoadedSource load_source(const RunManifest& m) {
  LoadedSource s;
  if (m.sequence) {
    auto seq = std::make_unique<ImageSequence>(*m.sequence, m.config.histogram_bins);
    if (!seq->has_ground_truth()) {
      throw PreconditionError(
          fmt::format("{} has no groundtruth.txt; the first box is needed to start",
                      m.sequence->string()));
    }
    s.name = m.sequence->filename().string();
    if (s.name.empty()) s.name = m.sequence->parent_path().filename().string();
    s.tags = {"sequence"};
    s.init = seq->ground_truth().front();
    s.source = std::move(seq);
    return s;
  }
  ScenarioSpec spec = m.scenario ? builtin_scenario(*m.scenario) : load_scenario(*m.scenario_file);
  auto sc = std::make_unique<Scenario>(spec);
  s.name = spec.name.empty() ? "scenario" : spec.name;
  s.tags = spec.tags;
  s.init = sc->ground_truth(0).box;
  s.source = std::move(sc);
  return s;
}

ordered_json seed_summary(const LoadedSource& src, Variant v, const SeedResult& r) {
  ordered_json j;
  j["source"] = src.name;
  j["tags"] = src.tags;
  j["variant"] = std::string(to_string(v));
  j["seed"] = r.seed;
  j["frames"] = r.frames;
  j["auc"] = r.curve ? ordered_json(r.curve->auc) : ordered_json(nullptr);
  j["oracle_queries"] = r.oracle_queries;
  j["final_store_size"] = r.final_store_size;
  j["occluded_frames"] = r.occluded_frames;
  return j;
}

RunResult run_loaded(const RunManifest& m, LoadedSource& src) {
  RunResult result;
  result.source = src.name;
  result.tags = src.tags;
  result.variant = m.variant;
  const std::filesystem::path base = m.out_dir / src.name / std::string(to_string(m.variant));
  std::filesystem::create_directories(base);

  for (std::uint64_t seed : m.seeds) {
    const std::filesystem::path dir = base / fmt::format("seed_{}", seed);
    std::filesystem::create_directories(dir);
    auto trace = open_out(dir / "trace.csv");
    std::ofstream store;
    if (m.dump_store) store = open_out(dir / "store.csv");
    spdlog::info("{} / {} / seed {}", src.name, to_string(m.variant), seed);
    SeedResult r = track(*src.source, src.init, m.config, m.variant, seed, m.grid, &trace,
                         m.dump_store ? &store : nullptr);
    if (r.curve) {
      auto curve = open_out(dir / "curve.csv");
      write_curve_csv(curve, *r.curve);
    }
    write_json(dir / "summary.json", seed_summary(src, m.variant, r));
    result.seeds.push_back(std::move(r));
  }

  ordered_json avg;
  avg["source"] = src.name;
  avg["tags"] = src.tags;
  avg["variant"] = std::string(to_string(m.variant));
  avg["seeds"] = m.seeds;
  ordered_json per_seed = ordered_json::array();
  double queries = 0.0, store = 0.0;
  for (const SeedResult& r : result.seeds) {
    per_seed.push_back(r.curve ? ordered_json(r.curve->auc) : ordered_json(nullptr));
    queries += static_cast<double>(r.oracle_queries);
    store += static_cast<double>(r.final_store_size);
  }
  const double n = static_cast<double>(result.seeds.size());
  const auto mean = result.mean_auc();
  avg["mean_auc"] = mean ? ordered_json(*mean) : ordered_json(nullptr);
  avg["auc_per_seed"] = per_seed;
  avg["mean_oracle_queries"] = queries / n;
  avg["mean_final_store_size"] = store / n;
  if (mean) {
    std::vector<RunRecord> recs;
    for (const SeedResult& r : result.seeds) recs.push_back({src.name, src.tags, r.seed, r.curve->auc});
    avg["attributes"] = rows_json(aggregate(recs));
  }
  write_json(base / "summary.json", avg);

  auto timing = open_out(base / "timing.txt");
  for (const SeedResult& r : result.seeds) {
    fmt::print(timing, "seed={} frames={} step_seconds={:.6f} fps={:.2f}\n", r.seed, r.frames,
               r.step_seconds,
               r.step_seconds > 0 ? (r.frames - 1) / r.step_seconds : 0.0);
  }
  fmt::print(timing, "mean_fps={:.2f}\n", result.mean_fps());
  return result;
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::uint64_t a = parse_u64(text.substr(0, dots));
    const std::uint64_t b = parse_u64(text.substr(dots + 2));
    if (b < a) throw PreconditionError(fmt::format("empty seed range '{}'", text));
    if (b - a >= 100000) throw PreconditionError("seed range too large");
    for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto part = text.substr(start, comma == std::string_view::npos ? text.size() - start
                                                                         : comma - start);
    out.push_back(parse_u64(part));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void RunManifest::validate() const {
  const int sources = (scenario ? 1 : 0) + (scenario_file ? 1 : 0) + (sequence ? 1 : 0);
  if (sources != 1) {
    throw PreconditionError("give exactly one of a scenario, a scenario file or a sequence");
  }
  if (seeds.empty()) throw PreconditionError("no seeds");
  if (grid < 2) throw PreconditionError("grid must be >= 2");
  config.validate();
}

std::optional<double> RunResult::mean_auc() const {
  if (seeds.empty()) return std::nullopt;
  double sum = 0.0;
  for (const SeedResult& r : seeds) {
    if (!r.curve) return std::nullopt;
    sum += r.curve->auc;
  }
  return sum / static_cast<double>(seeds.size());
}

double RunResult::mean_fps() const {
  double sum = 0.0;
  for (const SeedResult& r : seeds) {
    sum += r.step_seconds > 0 ? (r.frames - 1) / r.step_seconds : 0.0;
  }
  return seeds.empty() ? 0.0 : sum / static_cast<double>(seeds.size());
}

SeedResult track(FrameSource& source, const TargetState& init, const TrackerConfig& config,
                 Variant variant, std::uint64_t seed, int grid, std::ostream* trace,
                 std::ostream* store_dump) {
  SeedResult r;
  r.seed = seed;
  r.frames = source.frame_count();
  const bool has_truth = source.truth(0).has_value();
  std::vector<TargetState> truth;

  auto write_row = [&](int t, const TargetState& est, bool occ, std::size_t unc, std::size_t q,
                       std::uint64_t q_total, std::size_t store, bool retrained, int pos,
                       double wsum) {
    if (!trace) return;
    fmt::print(*trace, "{},{:.9g},{:.9g},{:.9g},{:.9g},{},{},{},{},{},{},{},{:.9g}", t, est.cx,
               est.cy, est.w, est.h, occ ? 1 : 0, unc, q, q_total, store, retrained ? 1 : 0, pos,
               wsum);
    if (has_truth) {
      const TargetState g = truth.back();
      fmt::print(*trace, ",{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", g.cx, g.cy, g.w, g.h,
                 iou(est, g));
    } else {
      *trace << ",,,,,\n";
    }
  };

  if (trace) {
    *trace << "frame,cx,cy,w,h,occluded,uncertain,oracle_queries,oracle_queries_total,"
              "store_size,retrained,positives,weight_sum,gt_cx,gt_cy,gt_w,gt_h,iou\n";
  }
  CoTracker tracker = CoTracker::init(source, init, config, variant, seed);
  r.estimates.push_back(init);
  if (has_truth) truth.push_back(source.truth(0)->box);
  write_row(0, init, false, 0, 0, tracker.oracle_queries(),
            tracker.fast() ? tracker.fast()->size() : 0, false, 0, 0.0);

  double seconds = 0.0;
  for (int t = 1; t < source.frame_count(); ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const FrameResult fr = tracker.step(t);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.estimates.push_back(fr.estimate);
    if (fr.occluded) ++r.occluded_frames;
    if (has_truth) truth.push_back(source.truth(t)->box);
    write_row(t, fr.estimate, fr.occluded, fr.uncertain_count, fr.oracle_queries_this_frame,
              tracker.oracle_queries(), fr.knn_store_size, fr.retrained_oracle, fr.positives,
              fr.weight_sum);
  }
  r.step_seconds = seconds;
  r.oracle_queries = tracker.oracle_queries();
  r.final_store_size = tracker.fast() ? tracker.fast()->size() : 0;
  if (has_truth) r.curve = success_curve(r.estimates, truth, grid);
  if (store_dump && tracker.fast()) tracker.fast()->write_snapshot(*store_dump);
  return r;
}

RunResult run(const RunManifest& manifest) {
  manifest.validate();
  LoadedSource src = load_source(manifest);
  return run_loaded(manifest, src);
}

BenchResult bench(const BenchManifest& manifest) {
  if (manifest.seeds.empty()) throw PreconditionError("no seeds");
  std::vector<std::string> scenarios = manifest.scenarios;
  if (scenarios.empty()) {
    for (const ScenarioSpec& s : builtin_scenarios()) scenarios.push_back(s.name);
  }
  std::vector<Variant> variants = manifest.variants;
  if (variants.empty()) variants.assign(all_variants().begin(), all_variants().end());

  BenchResult result;
  std::filesystem::create_directories(manifest.out_dir);
  for (Variant v : variants) {
    std::vector<RunRecord> records;
    for (const std::string& name : scenarios) {
      RunManifest m;
      m.scenario = name;
      m.variant = v;
      m.config = manifest.config;
      m.seeds = manifest.seeds;
      m.out_dir = manifest.out_dir / "runs";
      m.grid = manifest.grid;
      RunResult r = run(m);
      for (const SeedResult& s : r.seeds) records.push_back({r.source, r.tags, s.seed, s.curve->auc});
      result.runs.push_back(std::move(r));
    }
    result.tables.emplace_back(v, aggregate(records));
  }

  auto csv = open_out(manifest.out_dir / "attribute_table.csv");
  csv << "variant,attribute,mean_auc,seed_variance,scenarios,runs\n";
  ordered_json j;
  j["seeds"] = manifest.seeds;
  j["grid"] = manifest.grid;
  ordered_json tables = ordered_json::object();
  for (const auto& [v, rows] : result.tables) {
    for (const AttributeRow& row : rows) {
      fmt::print(csv, "{},{},{:.9g},{:.9g},{},{}\n", to_string(v), row.attribute, row.mean_auc,
                 row.seed_variance, row.scenarios, row.runs);
    }
    tables[std::string(to_string(v))] = rows_json(rows);
  }
  j["variants"] = tables;
  write_json(manifest.out_dir / "attribute_table.json", j);

  auto timing = open_out(manifest.out_dir / "timing.txt");
  for (const RunResult& r : result.runs) {
    fmt::print(timing, "{} {} mean_fps={:.2f}\n", r.source, to_string(r.variant), r.mean_fps());
  }
  return result;
}

}  // namespace ust
