#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "support.hpp"
#include "ust/experiment.hpp"
#include "ust/io.hpp"
#include "ust/sequence.hpp"

using namespace ust;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

fs::path short_scenario_file(const fs::path& dir, const std::string& name, int frames) {
  ScenarioSpec s = builtin_scenario(name);
  s.frame_count = frames;
  const fs::path p = dir / (name + ".yaml");
  std::ofstream(p) << dump_scenario(s);
  return p;
}

}  // namespace

TEST_CASE("seed lists") {
  CHECK(parse_seeds("3") == std::vector<std::uint64_t>{3});
  CHECK(parse_seeds("1..4") == std::vector<std::uint64_t>{1, 2, 3, 4});
  CHECK(parse_seeds("7,2,9") == std::vector<std::uint64_t>{7, 2, 9});
  for (const char* bad : {"", "a", "1,,2", "4..1", "1..", "-3", "1.5", "0..999999"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_seeds(bad), PreconditionError);
  }
}

TEST_CASE("run manifest validation") {
  RunManifest m;
  CHECK_THROWS_AS(m.validate(), PreconditionError);
  m.scenario = "plain";
  CHECK_NOTHROW(m.validate());
  m.sequence = "/tmp";
  CHECK_THROWS_AS(m.validate(), PreconditionError);
  m.sequence.reset();
  m.seeds.clear();
  CHECK_THROWS_AS(m.validate(), PreconditionError);
}

TEST_CASE("a run writes traces, curves and summaries reproducibly") {
  const auto dir = support::scratch_dir("exp_run");
  RunManifest m;
  m.scenario_file = short_scenario_file(dir, "occlusion", 60);
  m.seeds = {1, 2};
  m.dump_store = true;
  auto go = [&](const fs::path& out) {
    m.out_dir = out;
    return run(m);
  };
  const RunResult a = go(dir / "a");
  const RunResult b = go(dir / "b");
  REQUIRE(a.seeds.size() == 2);
  CHECK(a.source == "occlusion");
  CHECK(a.mean_auc().has_value());
  for (const auto& s : a.seeds) {
    CHECK(s.frames == 60);
    CHECK(s.estimates.size() == 60);
    CHECK(s.oracle_queries > 0);
  }
  const fs::path base = dir / "a" / "occlusion" / "ust";
  for (const char* f : {"seed_1/trace.csv", "seed_1/curve.csv", "seed_1/summary.json",
                        "seed_1/store.csv", "seed_2/trace.csv", "summary.json", "timing.txt"}) {
    CAPTURE(f);
    CHECK(fs::exists(base / f));
  }
  CHECK(lines(base / "seed_1/trace.csv") == 61);
  CHECK(lines(base / "seed_1/curve.csv") == 102);
  for (const char* f : {"seed_1/trace.csv", "seed_2/curve.csv", "seed_2/summary.json",
                        "seed_1/store.csv", "summary.json"}) {
    CAPTURE(f);
    CHECK(slurp(base / f) == slurp(dir / "b" / "occlusion" / "ust" / f));
  }

  const auto j = nlohmann::json::parse(slurp(base / "summary.json"));
  CHECK(j["variant"] == "ust");
  CHECK(j["auc_per_seed"].size() == 2);
  CHECK(j["mean_auc"].get<double>() == doctest::Approx(*a.mean_auc()));
  CHECK(j.contains("attributes"));
  CHECK_FALSE(j.contains("fps"));
  const auto s1 = nlohmann::json::parse(slurp(base / "seed_1/summary.json"));
  CHECK(s1["oracle_queries"].get<std::uint64_t>() == a.seeds[0].oracle_queries);
  CHECK(s1["auc"].get<double>() == a.seeds[0].curve->auc);
}

TEST_CASE("the knn-only arm never queries the oracle") {
  const auto dir = support::scratch_dir("exp_knn");
  RunManifest m;
  m.scenario_file = short_scenario_file(dir, "plain", 40);
  m.variant = Variant::kKnnOnly;
  m.out_dir = dir / "out";
  const RunResult r = run(m);
  CHECK(r.seeds[0].oracle_queries == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "plain" / "knn-only" / "seed_1" / "summary.json"));
  CHECK(j["oracle_queries"] == 0);
}

TEST_CASE("tracking a rendered image sequence") {
  const auto dir = support::scratch_dir("exp_seq");
  ScenarioSpec s = builtin_scenario("plain");
  s.frame_count = 12;
  const Scenario sc(s);
  write_sequence(sc, dir / "seq");
  CHECK(fs::exists(ImageSequence::frame_path(dir / "seq", 11)));
  CHECK(fs::exists(dir / "seq" / "groundtruth.txt"));

  RunManifest m;
  m.sequence = dir / "seq";
  m.variant = Variant::kOracleOnly;
  m.config.sampler.n = 60;
  m.out_dir = dir / "out";
  const RunResult r = run(m);
  CHECK(r.source == "seq");
  REQUIRE(r.seeds[0].curve.has_value());
  CHECK(r.seeds[0].frames == 12);
  CHECK(r.seeds[0].curve->auc > 0.3);

  fs::remove(dir / "seq" / "groundtruth.txt");
  CHECK_THROWS_AS(run(m), PreconditionError);
}

TEST_CASE("bench writes attribute tables") {
  const auto dir = support::scratch_dir("exp_bench");
  BenchManifest b;
  b.scenarios = {"plain", "occlusion"};
  b.variants = {Variant::kKnnOnly};
  b.seeds = {1, 2};
  b.out_dir = dir;
  const BenchResult r = bench(b);
  REQUIRE(r.tables.size() == 1);
  const auto& rows = r.tables[0].second;
  REQUIRE(rows.size() == 3);
  CHECK(rows.back().attribute == "ALL");
  CHECK(rows.back().runs == 4);
  CHECK(lines(dir / "attribute_table.csv") == 4);
  const auto j = nlohmann::json::parse(slurp(dir / "attribute_table.json"));
  CHECK(j["variants"]["knn-only"].size() == 3);
  CHECK(fs::exists(dir / "runs" / "plain" / "knn-only" / "seed_2" / "trace.csv"));
  CHECK(fs::exists(dir / "timing.txt"));
  CHECK_THROWS_AS(bench(BenchManifest{{"nope"}, {}, {1}, {}, dir / "x", 101}), PreconditionError);
}
