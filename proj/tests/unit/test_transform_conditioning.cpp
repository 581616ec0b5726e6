#include <doctest.h>

#include <cmath>
#include <map>

#include "../support/fixtures.hpp"
#include "skipgan/conditioning.hpp"
#include "skipgan/error.hpp"
#include "skipgan/simcorpus.hpp"
#include "skipgan/transform.hpp"

using namespace skipgan;

namespace {

Table random_table(const SurveySchema& s, std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  Table t(static_cast<std::size_t>(s.num_features()));
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = testing::random_row(s, rng);
    testing::conform(s, row);
    t.append_row(row);
  }
  return t;
}

}  // namespace

TEST_CASE("mixture recovers well separated modes") {
  Rng rng(3);
  std::normal_distribution<double> a(-5, 0.5), b(4, 1.0);
  std::vector<double> v;
  for (int i = 0; i < 600; ++i) v.push_back(i % 3 == 0 ? a(rng) : b(rng));
  const auto modes = fit_mixture(v);
  REQUIRE(modes.size() >= 2);
  double wsum = 0;
  bool near_a = false, near_b = false;
  for (const auto& m : modes) {
    wsum += m.weight;
    near_a |= std::abs(m.mean + 5) < 0.3 && m.weight > 0.25;
    near_b |= std::abs(m.mean - 4) < 0.3 && m.weight > 0.5;
  }
  CHECK(wsum == doctest::Approx(1.0));
  CHECK(near_a);
  CHECK(near_b);
  CHECK(fit_mixture(std::vector<double>(20, 7.0)).size() == 1);
}

TEST_CASE("encode/decode round trip: categorical exact, continuous within 1e-6 relative") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = testing::random_schema(seed);
    const auto t = random_table(s, 120, seed);
    const auto tr = DataTransformer::fit(s, t);
    const auto enc = tr.encode(t);
    CHECK(enc.data.cols() == tr.layout().total_width);
    for (int f : s.categorical_features()) {
      const auto& sp = tr.layout().spans[static_cast<std::size_t>(f)];
      CHECK(sp.width == s.feature(f).cardinality());
      for (Eigen::Index r = 0; r < enc.data.rows(); ++r) CHECK(enc.data.row(r).segment(sp.offset, sp.width).sum() == 1.0);
    }
    const auto back = tr.decode(enc);
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (int f = 0; f < s.num_features(); ++f) {
        const double a = t(r, static_cast<std::size_t>(f)), b = back(r, static_cast<std::size_t>(f));
        if (s.feature(f).is_categorical()) {
          CHECK(a == b);
        } else {
          CHECK(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)));
        }
      }
    }
  }
}

TEST_CASE("default corpus encodes past 600 columns") {
  const auto pop = synthesize_population(PopulationSpec{});
  const auto tr = DataTransformer::fit(pop.schema, pop.table);
  CHECK(tr.layout().total_width > 600);
}

TEST_CASE("restrict: masks conform, idempotent, cascades reach fixpoint, primary kept") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const auto s = testing::random_schema(seed);
    for (int f : s.categorical_features()) {
      for (int k = 0; k < s.feature(f).cardinality(); ++k) {
        const auto c = restrict(make_cond(s, f, k), s);
        CHECK(c.feature == f);
        CHECK(c.category == k);
        CHECK(c.assigned.front() == ChainEntry{f, k});
        std::set<std::pair<int, int>> got;
        for (const auto& e : c.assigned) got.insert({e.feature, e.category});
        CHECK(got == testing::brute_force_closure(s, f, k));
        const auto again = restrict(c, s);
        CHECK(again.assigned == c.assigned);
      }
    }
  }
}

TEST_CASE("make_cond rejects bad indices") {
  const auto s = testing::random_schema(5);
  CHECK_THROWS_AS(make_cond(s, -1, 0), ValidationError);
  CHECK_THROWS_AS(make_cond(s, s.categorical_features().front(), 99), ValidationError);
  if (!s.continuous_features().empty()) CHECK_THROWS_AS(make_cond(s, s.continuous_features().front(), 0), ValidationError);
}

TEST_CASE("cond batches honour the target quota and draw only observed categories") {
  const auto s = testing::random_schema(42, {.min_categorical = 6, .max_categorical = 10});
  auto t = random_table(s, 60, 7);
  // Drop every row where the first categorical feature takes category 0.
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    if (t.category(r, 0) != 0) keep.push_back(r);
  }
  t = t.select(keep);
  const CategoryFrequencyTable freq(s, t);
  const ImportanceDistribution imp(s);
  Rng rng(11);
  const int y = s.target_index();
  for (int n : {2, 10, 30, 64}) {
    const auto batch = sample_cond_batch(s, freq, imp, n, 0.5, rng);
    REQUIRE(static_cast<int>(batch.size()) == n);
    int on_y = 0;
    for (const auto& c : batch) {
      on_y += c.feature == y;
      CHECK(freq.count(c.feature, c.category) > 0);
    }
    CHECK(on_y == n / 2);
    for (int i = 0; i < n - n / 2; ++i) CHECK(batch[static_cast<std::size_t>(i)].feature != y);
  }
  CHECK(target_quota(30, 0.5) == 15);
  CHECK(target_quota(7, 0.5) == 4);
  CHECK(target_quota(30, 0.0) == 0);
  CHECK_THROWS_AS(target_quota(30, 1.5), ValidationError);
}

TEST_CASE("log-frequency weights") {
  const auto s = SchemaBuilder().categorical("A", {"p", "q", "r"}).categorical("y", {"0", "1"}).target("y").build();
  Table t(2);
  for (int i = 0; i < 7; ++i) t.append_row(std::vector<double>{0, 0});
  for (int i = 0; i < 3; ++i) t.append_row(std::vector<double>{1, 1});
  const CategoryFrequencyTable freq(s, t);
  const double z = std::log(8.0) + std::log(4.0);
  CHECK(freq.weights(0)[0] == doctest::Approx(std::log(8.0) / z));
  CHECK(freq.weights(0)[1] == doctest::Approx(std::log(4.0) / z));
  CHECK(freq.weights(0)[2] == 0.0);
}

TEST_CASE("importance update is a convex blend of the old pmf and normalized scores") {
  const auto s = testing::random_schema(9, {.min_categorical = 4, .max_categorical = 4});
  const ImportanceDistribution imp(s);
  const auto n = imp.features().size();
  std::vector<double> scores(n, 0.0);
  scores[0] = 3.0;
  scores[1] = 1.0;
  const auto next = imp.updated(scores, 0.9);
  CHECK(next.probabilities()[0] == doctest::Approx(0.9 / n + 0.1 * 0.75));
  CHECK(next.probabilities()[1] == doctest::Approx(0.9 / n + 0.1 * 0.25));
  double total = 0;
  for (double p : next.probabilities()) total += p;
  CHECK(total == doctest::Approx(1.0));
  CHECK(next.updates() == 1);
}

TEST_CASE("match_rows returns rows carrying the primary condition") {
  const auto s = testing::random_schema(77);
  const auto t = random_table(s, 80, 3);
  const ConditionIndex index(s, t);
  const CategoryFrequencyTable freq(s, t);
  Rng rng(5);
  const auto conds = sample_cond_batch(s, freq, ImportanceDistribution(s), 40, 0.5, rng);
  const auto rows = match_rows(index, conds, rng);
  REQUIRE(rows.size() == conds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(t.category(rows[i], static_cast<std::size_t>(conds[i].feature)) == conds[i].category);
  }
  const CondVector impossible = make_cond(s, s.categorical_features().front(), 0);
  Table empty(static_cast<std::size_t>(s.num_features()));
  const ConditionIndex none(s, empty);
  CHECK_THROWS_AS(match_rows(none, std::vector<CondVector>{impossible}, rng), NumericError);
}
