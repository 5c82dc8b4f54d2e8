// Command-line front end: tracking runs, the ablation bench and scenario
// utilities.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ust/experiment.hpp"
#include "ust/io.hpp"
#include "ust/sequence.hpp"
#include "ust/simulator.hpp"

namespace {

struct SourceFlags {
  std::string scenario;
  std::string scenario_file;
  std::string sequence;
};

void add_scenario_flags(CLI::App* cmd, SourceFlags& f, bool with_sequence) {
  auto* a = cmd->add_option("--scenario", f.scenario, "Built-in scenario name");
  auto* b = cmd->add_option("--scenario-file", f.scenario_file, "Scenario YAML file");
  a->excludes(b);
  if (with_sequence) {
    auto* c = cmd->add_option("--sequence", f.sequence, "Directory of frame_NNNNNN.ppm files");
    c->excludes(a)->excludes(b);
  }
}

ust::ScenarioSpec scenario_from(const SourceFlags& f) {
  if (!f.scenario_file.empty()) return ust::load_scenario(f.scenario_file);
  if (!f.scenario.empty()) return ust::builtin_scenario(f.scenario);
  throw ust::PreconditionError("give --scenario or --scenario-file");
}

ust::TrackerConfig config_from(const std::string& path) {
  return path.empty() ? ust::TrackerConfig{} : ust::load_tracker_config(path);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    out.push_back(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  ust::configure_logging_from_env();

  CLI::App app{"Co-tracking with a budgeted KNN and an uncertainty-sampled oracle"};
  app.require_subcommand(1);

  // run
  SourceFlags run_src;
  std::string run_variant = "ust", run_config, run_seeds = "1", run_out = "out";
  int run_grid = 101;
  bool dump_store = false;
  auto* run = app.add_subcommand("run", "Track one source for a list of seeds");
  add_scenario_flags(run, run_src, true);
  run->add_option("--variant", run_variant, "ust | knn-only | knn-budgeted-only | oracle-only")
      ->capture_default_str();
  run->add_option("--config", run_config, "Tracker configuration YAML");
  run->add_option("--seeds", run_seeds, "A..B, A or a,b,c")->capture_default_str();
  run->add_option("--out", run_out, "Output directory")->capture_default_str();
  run->add_option("--grid", run_grid, "Success-curve grid size")->capture_default_str();
  run->add_flag("--dump-store", dump_store, "Write the final KNN store per seed");

  // bench
  std::string bench_variants, bench_scenarios, bench_config, bench_seeds = "1..5",
                                                             bench_out = "bench";
  int bench_grid = 101;
  auto* bench = app.add_subcommand("bench", "All scenarios x variants x seeds");
  bench->add_option("--variants", bench_variants, "Comma-separated subset of variants");
  bench->add_option("--scenarios", bench_scenarios, "Comma-separated subset of scenarios");
  bench->add_option("--config", bench_config, "Tracker configuration YAML");
  bench->add_option("--seeds", bench_seeds, "A..B, A or a,b,c")->capture_default_str();
  bench->add_option("--out", bench_out, "Output directory")->capture_default_str();
  bench->add_option("--grid", bench_grid, "Success-curve grid size")->capture_default_str();

  // scenario
  SourceFlags sc_src;
  bool sc_list = false;
  int sc_frames = 0;
  auto* scenario = app.add_subcommand("scenario", "Print a scenario as YAML, or list them");
  add_scenario_flags(scenario, sc_src, false);
  scenario->add_flag("--list", sc_list, "List built-in scenario names");
  scenario->add_option("--frames", sc_frames, "Extend to this many frames (forward/backward)");

  // groundtruth
  SourceFlags gt_src;
  std::string gt_out;
  auto* gt = app.add_subcommand("groundtruth", "Write x,y,w,h ground truth lines");
  add_scenario_flags(gt, gt_src, false);
  gt->add_option("--out", gt_out, "Output file (default: stdout)");

  // render
  SourceFlags rd_src;
  std::string rd_out;
  auto* render = app.add_subcommand("render", "Render a scenario to a PPM sequence");
  add_scenario_flags(render, rd_src, false);
  render->add_option("--out", rd_out, "Output directory")->required();

  // config
  std::string cfg_in;
  auto* config = app.add_subcommand("config", "Print a tracker configuration (defaults or file)");
  config->add_option("--config", cfg_in, "Configuration YAML to normalize");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ust::RunManifest m;
      if (!run_src.scenario.empty()) m.scenario = run_src.scenario;
      if (!run_src.scenario_file.empty()) m.scenario_file = run_src.scenario_file;
      if (!run_src.sequence.empty()) m.sequence = run_src.sequence;
      m.variant = ust::parse_variant(run_variant);
      m.config = config_from(run_config);
      m.seeds = ust::parse_seeds(run_seeds);
      m.out_dir = run_out;
      m.grid = run_grid;
      m.dump_store = dump_store;
      const ust::RunResult r = ust::run(m);
      const auto auc = r.mean_auc();
      fmt::print("{} {} seeds={} mean_auc={} mean_fps={:.1f}\n", r.source,
                 ust::to_string(r.variant), r.seeds.size(),
                 auc ? fmt::format("{:.4f}", *auc) : std::string("n/a"), r.mean_fps());
    } else if (*bench) {
      ust::BenchManifest m;
      if (!bench_variants.empty()) {
        for (const auto& v : split(bench_variants)) m.variants.push_back(ust::parse_variant(v));
      }
      if (!bench_scenarios.empty()) {
        for (const auto& s : split(bench_scenarios)) {
          ust::builtin_scenario(s);  // reject unknown names before any work
          m.scenarios.push_back(s);
        }
      }
      m.config = config_from(bench_config);
      m.seeds = ust::parse_seeds(bench_seeds);
      m.out_dir = bench_out;
      m.grid = bench_grid;
      const ust::BenchResult r = ust::bench(m);
      for (const auto& [v, rows] : r.tables) {
        for (const auto& row : rows) {
          fmt::print("{:<18} {:<12} {:.4f}\n", ust::to_string(v), row.attribute, row.mean_auc);
        }
      }
    } else if (*scenario) {
      if (sc_list) {
        for (const auto& s : ust::builtin_scenarios()) fmt::print("{}\n", s.name);
      } else {
        ust::ScenarioSpec s = scenario_from(sc_src);
        if (sc_frames > 0) s = ust::extended(s, sc_frames);
        std::cout << ust::dump_scenario(s);
      }
    } else if (*gt) {
      const ust::Scenario s(scenario_from(gt_src));
      std::vector<ust::TargetState> boxes;
      for (int t = 0; t < s.frame_count(); ++t) boxes.push_back(s.ground_truth(t).box);
      if (gt_out.empty()) {
        ust::write_ground_truth(std::cout, boxes);
      } else {
        std::ofstream out(gt_out);
        if (!out) throw ust::IoError(fmt::format("cannot write {}", gt_out));
        ust::write_ground_truth(out, boxes);
      }
    } else if (*render) {
      const ust::Scenario s(scenario_from(rd_src));
      ust::write_sequence(s, rd_out);
    } else if (*config) {
      std::cout << ust::dump_tracker_config(config_from(cfg_in));
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
