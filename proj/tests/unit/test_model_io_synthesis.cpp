#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "../support/fixtures.hpp"
#include "skipgan/error.hpp"
#include "skipgan/metrics.hpp"
#include "skipgan/model_io.hpp"
#include "skipgan/simcorpus.hpp"
#include "skipgan/synthesis.hpp"

using namespace skipgan;
namespace fs = std::filesystem;

namespace {

struct Trained {
  Population pop;
  GanModel model;
};

Trained& trained() {
  static Trained t = [] {
    PopulationSpec spec;
    spec.rows = 93;
    spec.categorical = 16;
    spec.constraints = 4;
    spec.signal_features = 6;
    spec.priors = {0.62, 0.38};
    auto pop = synthesize_population(spec);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 3;
    cfg.generator_hidden = 48;
    cfg.critic_hidden = 48;
    auto model = train(pop.schema, pop.table, cfg);
    return Trained{std::move(pop), std::move(model)};
  }();
  return t;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "skipgan_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("apportion matches exact integer largest remainder") {
  Rng rng(2);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<int> counts(static_cast<std::size_t>(k));
    int total = 0;
    for (auto& c : counts) total += c = std::uniform_int_distribution<int>(0, 40)(rng);
    if (total == 0) continue;
    std::vector<double> pmf;
    for (int c : counts) pmf.push_back(static_cast<double>(c) / total);
    const std::size_t n = static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 300)(rng));
    const auto got = apportion(n, pmf);
    CHECK(got == testing::brute_force_apportion(n, counts));
  }
  CHECK(apportion(10, std::vector<double>{0.5, 0.5}) == std::vector<int>{5, 5});
  CHECK(apportion(3, std::vector<double>{0.5, 0.5}) == std::vector<int>{2, 1});
}

TEST_CASE("total variation") {
  CHECK(total_variation(std::vector<double>{0.5, 0.5}, std::vector<double>{0.8, 0.2}) == doctest::Approx(0.3));
  CHECK_THROWS_AS(total_variation(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), ValidationError);
}

TEST_CASE("generated tables have the training size and apportioned class counts") {
  auto& t = trained();
  const auto spec = default_synthesis_spec(t.model);
  CHECK(spec.rows == t.pop.table.rows());
  std::vector<int> real_counts(2);
  for (std::size_t r = 0; r < t.pop.table.rows(); ++r) {
    ++real_counts[static_cast<std::size_t>(t.pop.table.category(r, static_cast<std::size_t>(t.pop.schema.target_index())))];
  }
  CHECK(t.model.target_counts == real_counts);
  Rng rng(5);
  const auto syn = generate_table(t.model, spec, rng);
  REQUIRE(syn.rows() == t.pop.table.rows());
  std::vector<int> syn_counts(2);
  for (std::size_t r = 0; r < syn.rows(); ++r) {
    ++syn_counts[static_cast<std::size_t>(syn.category(r, static_cast<std::size_t>(t.pop.schema.target_index())))];
  }
  CHECK(syn_counts == testing::brute_force_apportion(syn.rows(), real_counts));

  SynthesisSpec other{257, {0.25, 0.75}, 0.05};
  const auto big = generate_table(t.model, other, rng);
  CHECK(big.rows() == 257);
  CHECK(total_variation(target_pmf(t.pop.schema, big), other.pmf) <= 0.05);

  Rng r1(9), r2(9);
  CHECK(generate_table(t.model, spec, r1) == generate_table(t.model, spec, r2));

  SynthesisSpec bad{10, {1.0}, 0.05};
  CHECK_THROWS_AS(generate_table(t.model, bad, rng), ValidationError);
}

TEST_CASE("augment concatenates real then synthetic rows") {
  auto& t = trained();
  Rng rng(1);
  const auto syn = generate_table(t.model, SynthesisSpec{7, {0.5, 0.5}, 0.2}, rng);
  const auto a = augment(t.pop.schema, t.pop.table, syn);
  REQUIRE(a.table.rows() == t.pop.table.rows() + 7);
  CHECK(a.table.row(0)[0] == t.pop.table.row(0)[0]);
  CHECK(std::count(a.synthetic.begin(), a.synthetic.end(), true) == 7);
  CHECK_FALSE(a.synthetic[t.pop.table.rows() - 1]);
  CHECK(a.synthetic[t.pop.table.rows()]);
  Table narrow(3);
  narrow.append_row(std::vector<double>{0, 0, 0});
  CHECK_THROWS_AS(augment(t.pop.schema, t.pop.table, narrow), SchemaMismatchError);
}

TEST_CASE("synthesis metadata records provenance") {
  auto& t = trained();
  const auto spec = default_synthesis_spec(t.model);
  Rng rng(4);
  const auto syn = generate_table(t.model, spec, rng);
  const auto j = nlohmann::json::parse(synthesis_metadata(t.model, spec, 4, 2, syn));
  CHECK(j.at("schema_hash") == hex64(t.pop.schema.hash()));
  CHECK(j.at("config_hash") == hex64(config_hash(t.model.config)));
  CHECK(j.at("replicate") == 2);
  CHECK(j.at("rows") == spec.rows);
}

TEST_CASE("model files round-trip bit for bit") {
  auto& t = trained();
  const auto path = scratch("roundtrip.skg");
  save_model(t.model, path.string());
  auto back = load_model(path.string(), t.pop.schema.hash());
  CHECK(back.schema == t.model.schema);
  CHECK(back.state == t.model.state);
  CHECK(back.target_counts == t.model.target_counts);
  CHECK(config_hash(back.config) == config_hash(t.model.config));
  CHECK(back.generator_checksum() == t.model.generator_checksum());
  const auto again = scratch("roundtrip2.skg");
  save_model(back, again.string());
  CHECK(slurp(path) == slurp(again));

  const auto spec = default_synthesis_spec(t.model);
  Rng r1(8), r2(8);
  CHECK(generate_table(t.model, spec, r1) == generate_table(back, spec, r2));
}

TEST_CASE("damaged model files raise FormatError") {
  auto& t = trained();
  const auto path = scratch("damaged.skg");
  save_model(t.model, path.string());
  const auto good = slurp(path);

  auto bad = good;
  bad[0] = 'X';
  spit(path, bad);
  CHECK_THROWS_AS(load_model(path.string()), FormatError);

  bad = good;
  bad[8] = static_cast<char>(bad[8] + 1);  // version
  spit(path, bad);
  CHECK_THROWS_AS(load_model(path.string()), FormatError);

  bad = good;
  bad[bad.size() / 2] = static_cast<char>(bad[bad.size() / 2] ^ 0x40);
  spit(path, bad);
  CHECK_THROWS_AS(load_model(path.string()), FormatError);

  spit(path, good.substr(0, good.size() - 5));
  CHECK_THROWS_AS(load_model(path.string()), FormatError);

  spit(path, good);
  CHECK_THROWS_AS(load_model(path.string(), t.pop.schema.hash() + 1), SchemaMismatchError);
  CHECK_THROWS_AS(load_model(scratch("missing.skg").string()), Error);
}

TEST_CASE("train config JSON") {
  TrainConfig c;
  c.q = 7;
  c.omega = 0.25;
  c.enforce = false;
  const auto back = train_config_from_json(train_config_to_json(c));
  CHECK(train_config_to_json(back) == train_config_to_json(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(TrainConfig{}) != config_hash(c));
  CHECK(train_config_from_json(R"({"epochs": 3})").epochs == 3);
  CHECK_THROWS_AS(train_config_from_json(R"({"epoch": 3})"), ParseError);
  CHECK_THROWS_AS(train_config_from_json(R"({"omega": 2})"), ValidationError);
}
