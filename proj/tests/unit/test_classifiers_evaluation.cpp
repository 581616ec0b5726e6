#include <doctest.h>

#include <json.hpp>
#include <mutex>
#include <set>
#include <stdexcept>

#include "../support/fixtures.hpp"
#include "skipgan/error.hpp"
#include "skipgan/evaluation.hpp"
#include "skipgan/metrics.hpp"
#include "skipgan/simcorpus.hpp"
#include "skipgan/synthesis.hpp"

using namespace skipgan;

namespace {

Population population(int rows, ProblemMode mode = ProblemMode::A, std::uint64_t seed = 1) {
  PopulationSpec spec;
  spec.rows = rows;
  spec.categorical = 30;
  spec.constraints = 6;
  spec.signal_features = 8;
  spec.effect = 2.0;
  spec.noise = 0.5;
  spec.seed = seed;
  spec.mode = mode;
  if (mode == ProblemMode::B) spec.classes = 3;
  return synthesize_population(spec);
}

// Cheap members of the zoo, for tests that need several fits.
std::vector<ClassifierSpec> quick_zoo() {
  std::vector<ClassifierSpec> out;
  for (const auto& s : default_zoo()) {
    if (s.kind == ClassifierKind::elastic_net || s.kind == ClassifierKind::decision_tree || s.name == "gbt-shallow") {
      out.push_back(s);
    }
  }
  REQUIRE(out.size() == 3);
  return out;
}

std::vector<int> labels_of(const SurveySchema& s, const Table& t) {
  std::vector<int> y;
  for (std::size_t r = 0; r < t.rows(); ++r) y.push_back(t.category(r, static_cast<std::size_t>(s.target_index())));
  return y;
}

}  // namespace

TEST_CASE("default zoo") {
  const auto zoo = default_zoo();
  CHECK(zoo.size() == 7);
  std::set<std::string> names;
  std::set<ClassifierKind> kinds;
  for (const auto& s : zoo) {
    names.insert(s.name);
    kinds.insert(s.kind);
    CHECK(parse_classifier_kind(to_string(s.kind)) == s.kind);
  }
  CHECK(names.size() == zoo.size());
  CHECK(kinds.size() == 6);
  CHECK_THROWS_AS(parse_classifier_kind("svm"), ValidationError);
}

TEST_CASE("feature encoder: one-hot categoricals, standardized continuous, no target") {
  const auto s = SchemaBuilder().categorical("A", {"p", "q", "r"}).continuous("X").categorical("y", {"0", "1"}).target("y").build();
  Table t(3);
  t.append_row(std::vector<double>{0, 1.0, 0});
  t.append_row(std::vector<double>{2, 3.0, 1});
  const FeatureEncoder enc(s, t);
  CHECK(enc.width() == 4);
  const auto x = enc.transform(t);
  CHECK(x(0, 0) == 1.0);
  CHECK(x(1, 2) == 1.0);
  CHECK(x(0, 1) == 0.0);
  CHECK(x(0, 3) == doctest::Approx(-1.0));
  CHECK(x(1, 3) == doctest::Approx(1.0));
}

TEST_CASE("every zoo member learns a planted signal and is deterministic") {
  const auto train = population(400);
  const auto test = population(400, ProblemMode::A, 2);
  const auto y = labels_of(test.schema, test.table);
  const double bound = oracle_auroc_bound(test.oracle, test.schema, test.table);
  for (const auto& spec : default_zoo()) {
    const auto p = fit_predict(spec, train.schema, train.table, test.table, 11);
    REQUIRE(p.size() == test.table.rows());
    REQUIRE(p.front().size() == 2);
    const double a = *auroc_macro(p, y);
    MESSAGE(spec.name << " AUROC " << a << " (bound " << bound << ")");
    CHECK(a > 0.7);
    CHECK(a <= bound + 0.05);
    CHECK(fit_predict(spec, train.schema, train.table, test.table, 11) == p);
  }
}

TEST_CASE("multiclass targets use one-vs-all columns") {
  const auto train = population(300, ProblemMode::B);
  const auto test = population(150, ProblemMode::B, 3);
  for (const auto& spec : quick_zoo()) {
    const auto p = fit_predict(spec, train.schema, train.table, test.table, 2);
    REQUIRE(p.size() == 150);
    CHECK(p.front().size() == 3);
    CHECK(*auroc_macro(p, labels_of(test.schema, test.table)) > 0.6);
  }
}

TEST_CASE("stratified split") {
  const auto pop = population(257);
  const auto split = stratified_split(pop.schema, pop.table, 0.2, 9);
  CHECK(split.test.size() == 51);
  CHECK(split.train.size() == 206);
  CHECK(std::is_sorted(split.train.begin(), split.train.end()));
  std::set<std::size_t> all(split.train.begin(), split.train.end());
  all.insert(split.test.begin(), split.test.end());
  CHECK(all.size() == 257);
  std::vector<int> counts(2), test_counts(2);
  for (std::size_t r = 0; r < pop.table.rows(); ++r) ++counts[static_cast<std::size_t>(pop.table.category(r, static_cast<std::size_t>(pop.schema.target_index())))];
  for (auto r : split.test) ++test_counts[static_cast<std::size_t>(pop.table.category(r, static_cast<std::size_t>(pop.schema.target_index())))];
  CHECK(test_counts == testing::brute_force_apportion(51, counts));
  CHECK(stratified_split(pop.schema, pop.table, 0.2, 9).test == split.test);
  CHECK_FALSE(stratified_split(pop.schema, pop.table, 0.2, 10).test == split.test);
}

TEST_CASE("shuffle_labels permutes only the target") {
  const auto pop = population(100);
  Rng rng(1);
  const auto sh = shuffle_labels(pop.schema, pop.table, rng);
  const auto y0 = labels_of(pop.schema, pop.table), y1 = labels_of(pop.schema, sh);
  CHECK(std::is_permutation(y0.begin(), y0.end(), y1.begin()));
  CHECK(y0 != y1);
  for (std::size_t r = 0; r < 100; ++r) CHECK(sh.row(r)[0] == pop.table.row(r)[0]);
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
  std::vector<int> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "7");
  }
}

TEST_CASE("summaries are permutation invariant") {
  Rng rng(3);
  std::vector<double> v;
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 500; ++i) v.push_back(u(rng) * (i % 7 == 0 ? 1e-9 : 1.0));
  const auto a = summarize(v);
  std::shuffle(v.begin(), v.end(), rng);
  const auto b = summarize(v);
  CHECK(a.mean == b.mean);
  CHECK(a.stddev == b.stddev);
  CHECK(a.count == 500);
  CHECK(summarize({2.0}).stddev == 0.0);
  CHECK(summarize({1.0, 3.0}).stddev == doctest::Approx(std::sqrt(2.0)));
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("controls: the training table as synthetic data") {
  const auto pop = population(360);
  const auto split = stratified_split(pop.schema, pop.table, 0.25, 4);
  const auto train = pop.table.select(split.train), test = pop.table.select(split.test);
  EvalOptions opt;
  opt.zoo = quick_zoo();
  opt.shuffled_control = false;
  const auto r = evaluate_split(pop.schema, train, test, {train, train}, opt, 21);
  CHECK(*compatibility(r) == 0.0);
  CHECK(r.conflict == std::vector<double>{0.0, 0.0});
  // Duplicating every training row barely moves any classifier.
  CHECK(std::abs(*utility_gain(r)) < 0.03);
  CHECK(r.shuffled.empty());
}

TEST_CASE("controls: label-shuffled augmentation does not help") {
  const auto pop = population(360);
  const auto split = stratified_split(pop.schema, pop.table, 0.25, 4);
  const auto train = pop.table.select(split.train), test = pop.table.select(split.test);
  Rng rng(8);
  std::vector<Table> noise;
  for (int i = 0; i < 3; ++i) noise.push_back(shuffle_labels(pop.schema, train, rng));
  EvalOptions opt;
  opt.zoo = quick_zoo();
  const auto r = evaluate_split(pop.schema, train, test, noise, opt, 21);
  CHECK(*utility(r) <= *baseline(r));
  CHECK(*compatibility(r) < -0.1);
  CHECK(*shuffled_compatibility(r) < -0.1);
}

TEST_CASE("benchmark reports are complete, valid and reproducible across job counts") {
  const auto pop = population(180);
  BenchmarkConfig cfg;
  cfg.train.epochs = 1;
  cfg.train.generator_hidden = 32;
  cfg.train.critic_hidden = 32;
  cfg.seeds = {1, 2};
  cfg.replicates = 3;
  cfg.eval.zoo = quick_zoo();
  std::size_t hooks = 0;
  std::mutex m;
  cfg.on_generated = [&](std::size_t, GanModel& model, const Table& train, const std::vector<Table>& reps) {
    std::lock_guard lock(m);
    ++hooks;
    CHECK(reps.size() == 3);
    for (const auto& t : reps) CHECK(t.rows() == train.rows());
    CHECK(model.train_rows() == train.rows());
  };
  const auto a = run_benchmark(pop.schema, pop.table, cfg);
  CHECK(hooks == 2);
  cfg.eval.jobs = 3;
  cfg.on_generated = nullptr;
  const auto b = run_benchmark(pop.schema, pop.table, cfg);
  const auto doc = report_to_json(a);
  CHECK(doc == report_to_json(b));
  CHECK_NOTHROW(validate_report_document(doc));
  const auto j = nlohmann::json::parse(doc);
  CHECK(j["metrics"]["conflict"]["count"] == 6);
  CHECK(j["metrics"]["compatibility"]["count"] == 18);
  CHECK(a.splits.size() == 2);
  CHECK(a.classifiers.size() == 3);
  CHECK(plot_data_csv(a).rfind("panel,classifier,mean,stddev,count,baseline\n", 0) == 0);

  auto broken = j;
  broken["metrics"].erase("utility");
  CHECK_THROWS_AS(validate_report_document(broken.dump()), FormatError);
  CHECK_THROWS_AS(validate_report_document("[]"), FormatError);
  CHECK_THROWS_AS(validate_report_document("{"), FormatError);
}

TEST_CASE("ablation pairs arms on one split and seed") {
  const auto pop = population(120);
  AblationConfig cfg;
  cfg.train.epochs = 2;
  cfg.train.generator_hidden = 32;
  cfg.train.critic_hidden = 32;
  cfg.seeds = {4};
  cfg.replicates = 2;
  cfg.record_epoch = 1;
  const auto r = run_ablation(pop.schema, pop.table, cfg);
  REQUIRE(r.rows.size() == 1);
  const auto& row = r.rows.front();
  CHECK(row.enforced.conflict.size() == 2);
  CHECK(row.relaxed.conflict.size() == 2);
  CHECK(row.enforced.generator_checksum != row.relaxed.generator_checksum);
  CHECK(mean_conflict(row.enforced) == doctest::Approx((row.enforced.conflict[0] + row.enforced.conflict[1]) / 2));
  const auto j = nlohmann::json::parse(ablation_to_json(r));
  CHECK(j.contains("rows"));
  CHECK(ablation_to_json(run_ablation(pop.schema, pop.table, cfg)) == ablation_to_json(r));
}
