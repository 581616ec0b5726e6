#include <doctest.h>

#include <sstream>

#include "../support/fixtures.hpp"
#include "skipgan/error.hpp"
#include "skipgan/schema.hpp"
#include "skipgan/table.hpp"

using namespace skipgan;

namespace {

// TB3 gates TB4 and TB5; TB4 = BLANK cascades into TB6.
SurveySchema smoking_schema() {
  return SchemaBuilder()
      .categorical("TB3", {"Yes", "No"})
      .categorical("TB4", {"1-5 cigarettes a day", "6-10", "11-20", "more than 20", "other"})
      .categorical("TB5", {"a", "b"})
      .categorical("TB6", {"x", "y", "z"})
      .continuous("AGE")
      .categorical("y", {"no", "yes"})
      .constraint("TB3", "No", {{"TB4", std::string(kBlankLabel)}, {"TB5", std::string(kBlankLabel)}})
      .constraint("TB4", std::string(kBlankLabel), {{"TB6", std::string(kBlankLabel)}})
      .target("y")
      .build();
}

}  // namespace

TEST_CASE("builder marks chain features omissible and appends BLANK") {
  const auto s = smoking_schema();
  CHECK_FALSE(s.feature(0).omissible);
  CHECK(s.feature(1).omissible);
  CHECK(s.feature(1).cardinality() == 6);
  CHECK(s.feature(1).categories.back() == kBlankLabel);
  CHECK(s.feature(3).blank_index() == 3);
  CHECK(s.target_index() == 5);
  CHECK(s.continuous_features() == std::vector<int>{4});
}

TEST_CASE("closure cascades through BLANK triggers") {
  const auto s = smoking_schema();
  const auto c = s.closure(0, 1);
  CHECK(c.size() == 4);
  CHECK(c.front() == ChainEntry{0, 1});
  const auto oracle = testing::brute_force_closure(s, 0, 1);
  for (const auto& e : c) CHECK(oracle.count({e.feature, e.category}) == 1);
  CHECK(s.closure(0, 0).size() == 1);
}

TEST_CASE("validate_row reports mismatched chain positions of triggered constraints") {
  const auto s = smoking_schema();
  std::vector<double> row{1, 0, 0, 1, 30.0, 0};  // TB3=No but TB4, TB5 answered
  auto v = validate_row(s, row);
  REQUIRE(v.size() == 1);
  CHECK(v[0].constraint == 0);
  CHECK(v[0].positions == std::vector<int>{0, 1});
  row = {1, 5, 0, 3, 30.0, 0};
  v = validate_row(s, row);
  REQUIRE(v.size() == 1);
  CHECK(v[0].positions == std::vector<int>{1});
  row = {0, 0, 0, 0, 1.0, 1};
  CHECK(validate_row(s, row).empty());
}

TEST_CASE("schema invariants are enforced") {
  auto base = [] { return SchemaBuilder().categorical("A", {"p", "q"}).categorical("B", {"r", "s"}).categorical("y", {"0", "1"}); };
  CHECK_THROWS_AS(base().target("y").constraint("A", "p", {{"A", std::string(kBlankLabel)}}).build(), ValidationError);
  CHECK_THROWS_AS(base().target("y").constraint("A", "p", {{"y", std::string(kBlankLabel)}}).build(), ValidationError);
  CHECK_THROWS_AS(base().target("y").constraint("y", "1", {{"A", std::string(kBlankLabel)}}).build(), ValidationError);
  CHECK_THROWS_AS(base().target("y").constraint("A", "zz", {{"B", std::string(kBlankLabel)}}).build(), ValidationError);
  CHECK_THROWS_AS(base().target("y").constraint("A", "p", {{"C", std::string(kBlankLabel)}}).build(), ValidationError);
  CHECK_THROWS_AS(base()
                      .target("y")
                      .constraint("A", "p", {{"B", std::string(kBlankLabel)}})
                      .constraint("B", std::string(kBlankLabel), {{"A", std::string(kBlankLabel)}})
                      .build(),
                  ValidationError);
  CHECK_THROWS_AS(base().build(), ValidationError);
  CHECK_THROWS_AS(SchemaBuilder().categorical("A", {"p"}).categorical("y", {"0", "1"}).target("y").build(), ValidationError);
  CHECK_THROWS_AS(SchemaBuilder().categorical("A", {"p", "p"}).categorical("y", {"0", "1"}).target("y").build(), ValidationError);
  // Two constraints forcing B to different categories under one cascade.
  CHECK_THROWS_AS(SchemaBuilder()
                      .categorical("A", {"p", "q"})
                      .categorical("B", {"r", "s"})
                      .categorical("C", {"t", "u"})
                      .categorical("y", {"0", "1"})
                      .constraint("A", "p", {{"B", "r"}, {"C", std::string(kBlankLabel)}})
                      .constraint("C", std::string(kBlankLabel), {{"B", "s"}})
                      .target("y")
                      .build(),
                  ValidationError);
}

TEST_CASE("schema documents round-trip and hash canonically") {
  const auto s = smoking_schema();
  const auto doc = serialize_schema(s);
  const auto back = parse_schema(doc);
  CHECK(back == s);
  CHECK(back.hash() == s.hash());
  CHECK(serialize_schema(back) == doc);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto r = testing::random_schema(seed);
    CHECK(parse_schema(serialize_schema(r)) == r);
  }
  CHECK(testing::random_schema(1).hash() != testing::random_schema(2).hash());
}

TEST_CASE("malformed schema documents report a location") {
  try {
    parse_schema("{\"schema_version\": 1, \"features\": [");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.location().find(':') != std::string::npos);
  }
  try {
    parse_schema(R"({"schema_version": 1, "features": [{"name": "A", "kind": "categorical", "categories": ["p", 3]}], "constraints": [], "target": "A"})");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.location() == "/features/0/categories/1");
  }
  CHECK_THROWS_AS(parse_schema(R"({"schema_version": 2, "features": [], "constraints": [], "target": "y"})"), ParseError);
}

TEST_CASE("table text round trip keeps categories and continuous values exactly") {
  const auto s = smoking_schema();
  Table t(static_cast<std::size_t>(s.num_features()));
  t.append_row(std::vector<double>{1, 5, 2, 3, 0.1 + 0.2, 0});
  t.append_row(std::vector<double>{0, 0, 1, 2, -1e-300, 1});
  t.append_row(std::vector<double>{0, 4, 0, 0, 12345.678901234567, 1});
  std::stringstream ss;
  write_table(s, t, ss);
  const auto back = read_table(s, ss);
  CHECK(back == t);
  CHECK(ss.str().find(std::string(kBlankLabel)) == std::string::npos);
}

TEST_CASE("table reader rejects bad cells") {
  const auto s = smoking_schema();
  std::stringstream missing("TB3,TB4,TB5,TB6,AGE,y\n,,,,1,no\n");
  CHECK_THROWS_AS(read_table(s, missing), ValidationError);
  std::stringstream unknown("TB3,TB4,TB5,TB6,AGE,y\nMaybe,,,,1,no\n");
  CHECK_THROWS_AS(read_table(s, unknown), ValidationError);
  std::stringstream nan("TB3,TB4,TB5,TB6,AGE,y\nNo,,,,abc,no\n");
  CHECK_THROWS_AS(read_table(s, nan), ValidationError);
  std::stringstream reordered("y,AGE,TB6,TB5,TB4,TB3\nyes,2.5,,,,No\n");
  const auto t = read_table(s, reordered);
  CHECK(t.rows() == 1);
  CHECK(t(0, 0) == 1);
  CHECK(t(0, 1) == 5);
  CHECK(t(0, 4) == 2.5);
}

TEST_CASE("target pmf") {
  const auto s = smoking_schema();
  Table t(static_cast<std::size_t>(s.num_features()));
  for (int i = 0; i < 4; ++i) t.append_row(std::vector<double>{0, 0, 0, 0, 0, i == 0 ? 1.0 : 0.0});
  CHECK(target_pmf(s, t) == std::vector<double>{0.75, 0.25});
}
