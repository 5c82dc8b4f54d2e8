#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "support.hpp"
#include "ust/cotracker.hpp"
#include "ust/simulator.hpp"

using namespace ust;

namespace {

std::vector<std::size_t> ids(std::initializer_list<std::size_t> v) { return v; }

Candidate positive(double cx, double score, double w = 10, double h = 10) {
  Candidate c;
  c.state = {cx, 0, w, h};
  c.score = score;
  c.label = Label::kPositive;
  c.weight = importance_weight(score, Label::kPositive);
  return c;
}

Scenario short_scenario(const std::string& name, int frames) {
  ScenarioSpec s = builtin_scenario(name);
  s.frame_count = std::min(s.frame_count, frames);
  return Scenario(s);
}

TargetState first_box(const Scenario& sc) { return sc.ground_truth(0).box; }

}  // namespace

TEST_CASE("select_uncertain examples") {
  const std::vector<double> s = {0.9, 0.1, -0.8, -0.35, 0.5, 1.0};
  CHECK(select_uncertain(s, -0.4, 0.4, 0) == ids({1, 3}));
  CHECK(select_uncertain(s, -0.4, 0.4, 2) == ids({1, 3}));
  CHECK(select_uncertain(s, -0.4, 0.4, 3) == ids({1, 3, 4}));
  CHECK(select_uncertain(s, -0.4, 0.4, 100) == ids({0, 1, 2, 3, 4, 5}));
  // Band edges are exclusive.
  const std::vector<double> edge = {0.4, -0.4, 0.0};
  CHECK(select_uncertain(edge, -0.4, 0.4, 0) == ids({2}));
  // Equal magnitudes fall to the lower index.
  const std::vector<double> tie = {1.0, -1.0, 1.0, -1.0};
  CHECK(select_uncertain(tie, -0.4, 0.4, 2) == ids({0, 1}));
  CHECK(select_uncertain(std::vector<double>{}, -0.4, 0.4, 5).empty());
}

TEST_CASE("select_uncertain properties") {
  auto g = support::rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = g() % 60;
    std::vector<double> s(n);
    for (double& v : s) v = std::round(support::uniform(g, -1, 1) * 10) / 10;
    const int m = static_cast<int>(g() % 8);
    const auto u = select_uncertain(s, -0.4, 0.4, m);
    CHECK(std::is_sorted(u.begin(), u.end()));
    CHECK(std::adjacent_find(u.begin(), u.end()) == u.end());
    const std::set<std::size_t> chosen(u.begin(), u.end());
    std::size_t band = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (-0.4 < s[i] && s[i] < 0.4) {
        ++band;
        CHECK(chosen.count(i) == 1);
      }
    }
    CHECK(u.size() >= std::min<std::size_t>(static_cast<std::size_t>(m), n));
    CHECK(u.size() <= band + static_cast<std::size_t>(m));
    // Nothing left out is strictly closer to zero than something forced in.
    double worst_in = 0;
    for (std::size_t i : u) worst_in = std::max(worst_in, std::abs(s[i]));
    if (u.size() > band) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen.count(i)) CHECK(std::abs(s[i]) >= worst_in);
      }
    }
    // Scaling scores and thresholds by a power of two changes nothing.
    std::vector<double> scaled(s);
    for (double& v : scaled) v *= 0.25;
    CHECK(select_uncertain(scaled, -0.1, 0.1, m) == u);
  }
}

TEST_CASE("label_candidates on a cold start sends every in-roi candidate to the oracle") {
  KnnStore empty(1, KnnConfig{});
  ArchiveNNOracle oracle(1, 1);
  oracle.retrain({{FeatureVector({0.0}), Label::kPositive, 0}});
  std::vector<Candidate> c(6);
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i].state = {static_cast<double>(i), 0, 1, 1};
    c[i].feature = FeatureVector({0.1 * static_cast<double>(i)});
  }
  c[4].in_roi = false;
  c[5].global = true;
  const auto u = label_candidates(c, &empty, &oracle, TrackerConfig{}, Variant::kUst, 1);
  CHECK(u == ids({0, 1, 2, 3}));
  CHECK(oracle.query_count() == 4);
  for (std::size_t i : u) {
    CHECK(c[i].labeled_by == LabelSource::kOracle);
    CHECK(c[i].label == Label::kPositive);
    CHECK(*c[i].weight == 1.0);
  }
  for (std::size_t i : {4, 5}) {
    CHECK(c[i].labeled_by == LabelSource::kForcedBackground);
    CHECK(c[i].label == Label::kNegative);
    CHECK(*c[i].weight == 0.0);
  }
}

TEST_CASE("label_candidates: confident candidates keep the fast label") {
  KnnConfig kc;
  kc.k = 3;
  kc.budgeting = false;
  KnnStore fast(1, kc);
  for (double x : {0.0, 0.1, 0.2}) fast.insert(FeatureVector({x}), Label::kPositive, 0);
  for (double x : {10.0, 10.1, 10.2}) fast.insert(FeatureVector({x}), Label::kNegative, 0);
  ArchiveNNOracle oracle(1, 1);
  oracle.retrain({{FeatureVector({5.0}), Label::kNegative, 0}});

  std::vector<Candidate> c(3);
  c[0].feature = FeatureVector({0.05});  // score 1
  c[1].feature = FeatureVector({10.1});  // score -1
  c[2].feature = FeatureVector({5.04});  // neighbors 0.2, 0.1, 10 -> 1/3
  TrackerConfig cfg;
  cfg.m = 0;

  auto a = c;
  const auto u = label_candidates(a, &fast, &oracle, cfg, Variant::kUst, 1);
  CHECK(u == ids({2}));
  CHECK(oracle.query_count() == 1);
  CHECK(a[0].labeled_by == LabelSource::kFast);
  CHECK(a[0].label == Label::kPositive);
  CHECK(*a[0].weight == 1.0);
  CHECK(a[1].label == Label::kNegative);
  CHECK(*a[1].weight == 0.0);
  CHECK(a[2].labeled_by == LabelSource::kOracle);
  CHECK(a[2].label == Label::kNegative);
  CHECK(*a[2].score == doctest::Approx(1.0 / 3.0));

  // Without an oracle the uncertain candidate keeps sign(score).
  auto b = c;
  const auto ub = label_candidates(b, &fast, nullptr, cfg, Variant::kKnnOnly, 1);
  CHECK(ub == ids({2}));
  CHECK(b[2].labeled_by == LabelSource::kFast);
  CHECK(b[2].label == Label::kPositive);
  CHECK(*b[2].weight == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("label_candidates: oracle-only consults the oracle for everything") {
  ArchiveNNOracle oracle(1, 1);
  oracle.retrain({{FeatureVector({0.0}), Label::kPositive, 0}});
  std::vector<Candidate> c(5);
  for (auto& x : c) x.feature = FeatureVector({1.0});
  const auto u = label_candidates(c, nullptr, &oracle, TrackerConfig{}, Variant::kOracleOnly, 1);
  CHECK(u.size() == 5);
  CHECK(oracle.query_count() == 5);
  CHECK_THROWS(label_candidates(c, nullptr, nullptr, TrackerConfig{}, Variant::kOracleOnly, 1));
}

TEST_CASE("localize: weighted mean of positives") {
  std::vector<Candidate> c = {positive(0, 0.5), positive(10, 1.0)};
  auto n = positive(1000, 0.9);
  n.label = Label::kNegative;
  n.weight = 0.0;
  c.push_back(n);
  auto g = positive(-1000, 1.0);
  g.global = true;
  c.push_back(g);
  const TargetState prev{5, 5, 7, 7};
  const auto loc = localize(c, 1, 1.0, prev);
  CHECK_FALSE(loc.occluded);
  CHECK(loc.positives == 2);
  CHECK(loc.weight_sum == 1.5);
  CHECK(loc.estimate.cx == doctest::Approx(20.0 / 3.0));
  CHECK(loc.estimate.cy == 0);
  CHECK(loc.estimate.w == doctest::Approx(10));
}

TEST_CASE("localize: occlusion thresholds are strict") {
  const TargetState prev{5, 5, 7, 7};
  std::vector<Candidate> three = {positive(0, 1), positive(1, 1), positive(2, 1)};
  CHECK(localize(three, 3, 0.5, prev).occluded);
  CHECK_FALSE(localize(three, 2, 0.5, prev).occluded);
  CHECK(localize(three, 2, 3.0, prev).occluded);
  CHECK_FALSE(localize(three, 2, 2.99, prev).occluded);
  const auto occ = localize(three, 3, 0.5, prev);
  CHECK(occ.estimate == prev);
  CHECK(localize({}, 0, 0.0, prev).occluded);
}

TEST_CASE("localize: oracle positives with negative scores weigh nothing") {
  std::vector<Candidate> c = {positive(0, 1), positive(10, 1), positive(100, -0.6)};
  c[2].labeled_by = LabelSource::kOracle;
  const auto loc = localize(c, 2, 1.0, {});
  CHECK(loc.positives == 3);
  CHECK(loc.weight_sum == 2.0);
  CHECK(loc.estimate.cx == 5.0);
}

TEST_CASE("localize matches a direct weighted mean") {
  auto g = support::rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Candidate> c;
    long double sx = 0, sy = 0, sw = 0, sh = 0, wsum = 0;
    int pos = 0;
    const int n = 1 + static_cast<int>(g() % 40);
    for (int i = 0; i < n; ++i) {
      Candidate k;
      k.state = support::random_box(g);
      const double s = support::uniform(g, -1, 1);
      k.score = s;
      k.label = sign_label(s);
      k.weight = importance_weight(s, *k.label);
      k.global = g() % 10 == 0;
      if (!k.global && k.label == Label::kPositive) {
        ++pos;
        wsum += s;
        sx += s * k.state.cx;
        sy += s * k.state.cy;
        sw += s * k.state.w;
        sh += s * k.state.h;
      }
      c.push_back(k);
    }
    const auto loc = localize(c, 3, 1.0, {});
    CHECK(loc.positives == pos);
    CHECK(loc.weight_sum == doctest::Approx(static_cast<double>(wsum)));
    CHECK(loc.occluded == !(pos > 3 && wsum > 1.0L));
    if (!loc.occluded) {
      CHECK(loc.estimate.cx == doctest::Approx(static_cast<double>(sx / wsum)));
      CHECK(loc.estimate.cy == doctest::Approx(static_cast<double>(sy / wsum)));
      CHECK(loc.estimate.w == doctest::Approx(static_cast<double>(sw / wsum)));
      CHECK(loc.estimate.h == doctest::Approx(static_cast<double>(sh / wsum)));
    }
  }
}

TEST_CASE("variant names round-trip") {
  for (Variant v : all_variants()) CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_variant("bogus"), PreconditionError);
}

TEST_CASE("tracker configuration validation") {
  TrackerConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau_l = 0.1;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = {};
  c.delta = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = {};
  c.m = c.sampler.n + 1;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = {};
  c.budget_cap = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
}

TEST_CASE("init seeds both classifiers") {
  Scenario sc = short_scenario("plain", 30);
  const TargetState box = first_box(sc);
  auto tr = CoTracker::init(sc, box, TrackerConfig{}, Variant::kUst, 3);
  REQUIRE(tr.fast() != nullptr);
  REQUIRE(tr.oracle() != nullptr);
  CHECK(tr.projector().output_dim() == 20);
  const auto on = tr.feature_of(0, box);
  const TargetState away{box.cx + 3 * box.w, box.cy, box.w, box.h};
  const auto off = tr.feature_of(0, away);
  CHECK(tr.fast()->score(on) > 0);
  CHECK(tr.fast()->score(off) < 0);
  CHECK(tr.estimate() == box);
  CHECK(tr.last_frame() == 0);

  CHECK_THROWS_AS(CoTracker::init(sc, {box.cx, box.cy, 0, box.h}, TrackerConfig{}, Variant::kUst, 3),
                  PreconditionError);
  CHECK_THROWS_AS(CoTracker::init(sc, {-50, -50, 10, 10}, TrackerConfig{}, Variant::kUst, 3),
                  PreconditionError);

  auto knn = CoTracker::init(sc, box, TrackerConfig{}, Variant::kKnnOnly, 3);
  CHECK(knn.oracle() == nullptr);
  CHECK(knn.oracle_queries() == 0);
  auto oo = CoTracker::init(sc, box, TrackerConfig{}, Variant::kOracleOnly, 3);
  CHECK(oo.fast() == nullptr);
}

TEST_CASE("step contract for the ust arm") {
  Scenario sc = short_scenario("occlusion", 400);
  TrackerConfig cfg;
  auto tr = CoTracker::init(sc, first_box(sc), cfg, Variant::kUst, 5);
  std::size_t attempts = tr.fast()->counters().insert_attempts;
  int occluded = 0;
  for (int t = 1; t < sc.frame_count(); ++t) {
    const auto r = tr.step(t);
    REQUIRE(r.frame == t);
    REQUIRE(r.candidates.size() >= static_cast<std::size_t>(cfg.sampler.n));
    REQUIRE(r.oracle_queries_this_frame == r.uncertain_count);
    REQUIRE(r.uncertain.size() == r.uncertain_count);
    REQUIRE(r.uncertain_count >= static_cast<std::size_t>(cfg.m));
    REQUIRE(r.retrained_oracle == (t % cfg.delta == 0));
    if (r.retrained_oracle) REQUIRE(tr.oracle()->staged() == 0);
    for (std::size_t i : r.uncertain) {
      REQUIRE(r.candidates[i].labeled_by == LabelSource::kOracle);
      REQUIRE(r.candidates[i].in_roi);
    }
    const auto& c = tr.fast()->counters();
    if (r.occluded) {
      ++occluded;
      REQUIRE(r.fast_updates.empty());
      REQUIRE(c.insert_attempts == attempts);
    } else {
      REQUIRE(r.fast_updates == r.uncertain);
      REQUIRE(c.insert_attempts == attempts + r.uncertain.size());
    }
    attempts = c.insert_attempts;
    REQUIRE(r.knn_store_size == tr.fast()->size());
    REQUIRE(tr.estimate() == r.estimate);
  }
  CHECK(occluded > 0);
  CHECK_THROWS_AS(tr.step(sc.frame_count() - 1), PreconditionError);
}

TEST_CASE("knn arms never query, oracle-only queries every in-roi candidate") {
  Scenario sc = short_scenario("plain", 40);
  for (Variant v : {Variant::kKnnOnly, Variant::kKnnBudgetedOnly}) {
    auto tr = CoTracker::init(sc, first_box(sc), TrackerConfig{}, v, 1);
    for (int t = 1; t < 40; ++t) {
      const auto r = tr.step(t);
      REQUIRE(r.oracle_queries_this_frame == 0);
      REQUIRE_FALSE(r.retrained_oracle);
      for (const auto& c : r.candidates) REQUIRE(c.labeled_by != LabelSource::kOracle);
    }
  }
  auto oo = CoTracker::init(sc, first_box(sc), TrackerConfig{}, Variant::kOracleOnly, 1);
  for (int t = 1; t < 40; ++t) {
    const auto r = oo.step(t);
    std::size_t roi = 0;
    for (const auto& c : r.candidates) roi += c.in_roi && !c.global;
    REQUIRE(r.oracle_queries_this_frame == roi);
    REQUIRE(r.knn_store_size == 0);
    REQUIRE(r.fast_updates.empty());
  }
}

TEST_CASE("tracking is deterministic for a fixed seed") {
  Scenario sc = short_scenario("distractor-cross", 80);
  auto run = [&](std::uint64_t seed) {
    auto tr = CoTracker::init(sc, first_box(sc), TrackerConfig{}, Variant::kUst, seed);
    std::vector<TargetState> out;
    for (int t = 1; t < sc.frame_count(); ++t) out.push_back(tr.step(t).estimate);
    return out;
  };
  const auto a = run(17), b = run(17), c = run(18);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("the tracker follows the target on the plain scenario") {
  Scenario sc = short_scenario("plain", 120);
  auto tr = CoTracker::init(sc, first_box(sc), TrackerConfig{}, Variant::kUst, 2);
  double total = 0;
  for (int t = 1; t < sc.frame_count(); ++t) total += iou(tr.step(t).estimate, sc.ground_truth(t).box);
  CHECK(total / (sc.frame_count() - 1) > 0.5);
}
