#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <thread>

#include "support.hpp"
#include "ust/oracle.hpp"

using namespace ust;

namespace {

const TargetState kAnyBox{0, 0, 10, 10};

OracleAnswer ask(const Oracle& o, const FeatureVector& f, const TargetState& box = kAnyBox,
                 int frame = 0) {
  return o.query(OracleQuery{f, box, frame});
}

LabeledSample sample(std::vector<double> x, Label l, int frame = 0) {
  return {FeatureVector(std::move(x)), l, frame};
}

}  // namespace

TEST_CASE("archive oracle: a single positive labels everything positive") {
  ArchiveNNOracle o(2, 15);
  o.retrain({sample({0, 0}, Label::kPositive)});
  auto g = support::rng(3);
  for (int i = 0; i < 50; ++i) {
    const FeatureVector f(support::random_vector(g, 2, 100.0));
    const auto a = ask(o, f);
    CHECK(a.decision == 1.0);
    CHECK(a.label == Label::kPositive);
  }
}

TEST_CASE("archive oracle matches a linear-scan vote") {
  const std::size_t dim = 8;
  ArchiveNNOracle o(dim, 15);
  auto g = support::rng(11);
  std::vector<support::Point> pts;
  LabeledSet batch;
  for (int i = 0; i < 300; ++i) {
    auto x = support::random_vector(g, dim);
    const int l = x[0] + 0.3 * x[1] > 0 ? 1 : -1;
    pts.push_back({x, l});
    batch.push_back(sample(x, l > 0 ? Label::kPositive : Label::kNegative));
  }
  o.retrain(batch);
  for (int q = 0; q < 200; ++q) {
    const auto x = support::random_vector(g, dim);
    const double ref = support::brute_vote(pts, x, 15);
    const auto a = ask(o, FeatureVector(x));
    REQUIRE(a.decision == ref);
    REQUIRE(a.label == (ref > 0 ? Label::kPositive : Label::kNegative));
  }
}

TEST_CASE("archive oracle lifecycle") {
  ArchiveNNOracle o(2, 3);
  const FeatureVector origin({0, 0});
  CHECK_FALSE(o.trained());
  CHECK_THROWS_AS(ask(o, origin), UntrainedOracleError);

  // An empty batch marks the model trained, but there is still nothing to vote.
  o.retrain({});
  CHECK(o.trained());
  CHECK(o.archive_size() == 0);
  CHECK_THROWS_AS(ask(o, origin), UntrainedOracleError);

  LabeledSet a;
  for (int i = 0; i < 3; ++i) a.push_back(sample({0.1 * i, 0}, Label::kNegative));
  o.retrain(a);
  CHECK(o.archive_size() == 3);
  CHECK(ask(o, origin).label == Label::kNegative);

  LabeledSet b;
  for (int i = 0; i < 5; ++i) b.push_back(sample({0.01 * i, 0.01}, Label::kPositive, 1));
  o.retrain(b);
  CHECK(o.archive_size() == 8);
  CHECK(ask(o, origin).label == Label::kPositive);
}

TEST_CASE("staged samples are invisible until commit") {
  ArchiveNNOracle o(1, 1);
  o.retrain({sample({0.0}, Label::kNegative)});
  o.stage(sample({0.5}, Label::kPositive, 1));
  o.stage(sample({0.6}, Label::kPositive, 1));
  CHECK(o.staged() == 2);
  CHECK(ask(o, FeatureVector({0.5})).label == Label::kNegative);
  CHECK(o.archive_size() == 1);
  o.commit();
  CHECK(o.staged() == 0);
  CHECK(o.archive_size() == 3);
  CHECK(ask(o, FeatureVector({0.5})).label == Label::kPositive);
}

TEST_CASE("archive oracle dimension mismatch") {
  ArchiveNNOracle o(3, 5);
  CHECK_THROWS_AS(o.retrain({sample({1, 2}, Label::kPositive)}), PreconditionError);
}

TEST_CASE("query counting") {
  ArchiveNNOracle o(1, 1);
  o.retrain({sample({0.0}, Label::kPositive)});
  const FeatureVector f({1.0});
  CHECK(o.query_count() == 0);
  for (int i = 0; i < 7; ++i) ask(o, f);
  o.label(OracleQuery{f, kAnyBox, 0});
  CHECK(o.query_count() == 8);
}

TEST_CASE("scripted oracle without flips returns the truth") {
  const TargetState truth{100, 100, 40, 20};
  ScriptedOracle o([&](int) { return GroundTruthFrame{truth, false}; }, {0.0, 0.6, 1});
  const FeatureVector f({0.0});
  CHECK(ask(o, f, truth).label == Label::kPositive);
  CHECK(ask(o, f, truth).decision == 1.0);
  // Shifted by a quarter of the width: IoU = 30/50 = 0.6, not above the threshold.
  CHECK(ask(o, f, {110, 100, 40, 20}).label == Label::kNegative);
  CHECK(ask(o, f, {109, 100, 40, 20}).label == Label::kPositive);
  CHECK(ask(o, f, {300, 300, 40, 20}).decision == -1.0);
}

TEST_CASE("scripted oracle labels everything negative during occlusion") {
  const TargetState truth{100, 100, 40, 20};
  ScriptedOracle o([&](int t) { return GroundTruthFrame{truth, t >= 5}; }, {0.0, 0.6, 1});
  const FeatureVector f({0.0});
  CHECK(ask(o, f, truth, 4).label == Label::kPositive);
  CHECK(ask(o, f, truth, 5).label == Label::kNegative);
}

TEST_CASE("scripted flips are deterministic and near the requested rate") {
  const TargetState truth{100, 100, 40, 20};
  auto gt = [&](int) { return GroundTruthFrame{truth, false}; };
  ScriptedOracle a(gt, {0.2, 0.6, 9});
  ScriptedOracle b(gt, {0.2, 0.6, 9});
  const FeatureVector f({0.0});
  auto g = support::rng(5);
  int flips = 0;
  const int n = 5000;
  for (int i = 0; i < n; ++i) {
    const TargetState box{100 + support::uniform(g, -3, 3), 100, 40, 20};
    const int frame = static_cast<int>(g() % 100);
    const auto x = ask(a, f, box, frame);
    CHECK(x.label == ask(a, f, box, frame).label);
    CHECK(x.label == ask(b, f, box, frame).label);
    flips += x.label == Label::kNegative;
  }
  // Binomial(5000, 0.2): sd is about 28.
  CHECK(flips > 850);
  CHECK(flips < 1150);
}

TEST_CASE("scripted oracle configuration errors") {
  auto gt = [](int) { return GroundTruthFrame{}; };
  CHECK_THROWS_AS(ScriptedOracle(gt, {1.0, 0.5, 0}), PreconditionError);
  CHECK_THROWS_AS(ScriptedOracle(gt, {-0.1, 0.5, 0}), PreconditionError);
  CHECK_THROWS_AS(ScriptedOracle(gt, {0.0, 0.0, 0}), PreconditionError);
  CHECK_THROWS_AS(ScriptedOracle(GroundTruthFn{}, {}), PreconditionError);
}

TEST_CASE("concurrent queries agree with sequential ones") {
  const std::size_t dim = 6;
  ArchiveNNOracle o(dim, 5);
  auto g = support::rng(21);
  LabeledSet batch;
  for (int i = 0; i < 400; ++i) {
    auto x = support::random_vector(g, dim);
    batch.push_back(sample(x, x[2] > 0 ? Label::kPositive : Label::kNegative));
  }
  o.retrain(batch);
  std::vector<FeatureVector> queries;
  for (int i = 0; i < 400; ++i) queries.emplace_back(support::random_vector(g, dim));
  std::vector<double> expected;
  for (const auto& q : queries) expected.push_back(ask(o, q).decision);
  const auto before = o.query_count();

  const int threads = 4;
  std::vector<std::vector<double>> got(threads, std::vector<double>(queries.size()));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = 0; i < queries.size(); ++i) got[t][i] = ask(o, queries[i]).decision;
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& row : got) CHECK(row == expected);
  CHECK(o.query_count() == before + threads * queries.size());
}
