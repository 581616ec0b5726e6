#include <doctest.h>

#include <cmath>

#include "../support/fixtures.hpp"
#include "skipgan/metrics.hpp"
#include "skipgan/transform.hpp"

using namespace skipgan;

TEST_CASE("conflict of one answered skipped question is a third on a six-wide span") {
  const auto s = SchemaBuilder()
                     .categorical("TB3", {"Yes", "No"})
                     .categorical("TB4", {"1-5 cigarettes a day", "6-10", "11-20", "21-30", "more"})
                     .categorical("y", {"0", "1"})
                     .constraint("TB3", "No", {{"TB4", std::string(kBlankLabel)}})
                     .target("y")
                     .build();
  Table t(3);
  t.append_row(std::vector<double>{1, 0, 0});
  CHECK(conflict(s, t) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  t.append_row(std::vector<double>{1, 5, 0});  // conforming
  t.append_row(std::vector<double>{0, 2, 1});  // trigger not fired
  CHECK(conflict(s, t) == doctest::Approx(1.0 / 9).epsilon(1e-15));
  Table empty(3);
  CHECK(conflict(s, empty) == 0.0);
}

TEST_CASE("conflict matches the brute-force Hamming oracle and validate_row") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto s = testing::random_schema(seed);
    Rng rng(seed * 31);
    Table t(static_cast<std::size_t>(s.num_features()));
    const int rows = std::uniform_int_distribution<int>(1, 50)(rng);
    const bool conforming = seed % 3 == 0;
    for (int r = 0; r < rows; ++r) {
      auto row = testing::random_row(s, rng);
      if (conforming) testing::conform(s, row);
      t.append_row(row);
    }
    const double c = conflict(s, t);
    bool any = false;
    for (std::size_t r = 0; r < t.rows(); ++r) any |= !validate_row(s, t.row(r)).empty();
    CHECK((c == 0.0) == !any);
    CHECK(std::abs(c - testing::brute_force_conflict(s, t)) <= 1e-12);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("encoded conflict hardens spans by argmax") {
  const auto s = testing::random_schema(8, {.min_categorical = 6});
  Rng rng(1);
  Table t(static_cast<std::size_t>(s.num_features()));
  for (int r = 0; r < 40; ++r) t.append_row(testing::random_row(s, rng));
  const auto tr = DataTransformer::fit(s, t);
  auto enc = tr.encode(t);
  // Soften every one-hot without moving its argmax.
  RowMatrixXd soft = enc.data * 0.6;
  for (int f : s.categorical_features()) {
    const auto& sp = tr.layout().spans[static_cast<std::size_t>(f)];
    soft.middleCols(sp.offset, sp.width).array() += 0.4 / sp.width;
  }
  CHECK(conflict(s, tr.layout(), soft) == doctest::Approx(conflict(s, t)).epsilon(1e-15));
}

TEST_CASE("auroc examples") {
  CHECK(*auroc(std::vector<double>{0.9, 0.8, 0.3, 0.7}, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(*auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{1, 1, 0, 0}) == 0.0);
  CHECK(*auroc(std::vector<double>(6, 0.5), std::vector<int>{1, 0, 1, 0, 1, 0}) == 0.5);
  CHECK_FALSE(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}).has_value());
}

TEST_CASE("auroc agrees with exhaustive pair counting to 1e-12") {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 200)(rng);
    const bool coarse = trial % 2 == 0;  // many ties
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::uniform_real_distribution<double> u;
    for (int i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] = coarse ? std::floor(u(rng) * 5) : u(rng);
      labels[static_cast<std::size_t>(i)] = u(rng) < 0.4 ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    CHECK(std::abs(*auroc(scores, labels) - testing::brute_force_auroc(scores, labels)) <= 1e-12);
  }
}

TEST_CASE("macro auroc averages one-vs-rest over present classes") {
  const std::vector<std::vector<double>> probs{{0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}, {0.2, 0.3, 0.5}, {0.6, 0.3, 0.1}};
  const std::vector<int> labels{0, 1, 2, 1};
  double expect = 0;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> s;
    std::vector<int> l;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      s.push_back(probs[i][static_cast<std::size_t>(k)]);
      l.push_back(labels[i] == k ? 1 : 0);
    }
    expect += testing::brute_force_auroc(s, l) / 3;
  }
  CHECK(*auroc_macro(probs, labels) == doctest::Approx(expect).epsilon(1e-15));
  // Class 2 absent: average over classes 0 and 1 only.
  const std::vector<int> two{0, 1, 1, 0};
  const auto m = auroc_macro(probs, two);
  REQUIRE(m.has_value());
  // Binary layout reduces to the column-1 AUROC.
  const std::vector<std::vector<double>> bin{{0.8, 0.2}, {0.3, 0.7}, {0.6, 0.4}};
  CHECK(*auroc_macro(bin, std::vector<int>{0, 1, 1}) == *auroc(std::vector<double>{0.2, 0.7, 0.4}, std::vector<int>{0, 1, 1}));
  CHECK_FALSE(auroc_macro(bin, std::vector<int>{1, 1, 1}).has_value());
}

TEST_CASE("expected auroc equals the weighted pair sum") {
  Rng rng(4);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 60)(rng);
    std::vector<double> s(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      s[static_cast<std::size_t>(i)] = std::floor(u(rng) * 8);
      p[static_cast<std::size_t>(i)] = u(rng);
    }
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = p[static_cast<std::size_t>(i)] * (1 - p[static_cast<std::size_t>(j)]);
        den += w;
        const double si = s[static_cast<std::size_t>(i)], sj = s[static_cast<std::size_t>(j)];
        num += w * (si > sj ? 1.0 : si == sj ? 0.5 : 0.0);
      }
    }
    CHECK(expected_auroc(s, p) == doctest::Approx(num / den).epsilon(1e-12));
  }
}
