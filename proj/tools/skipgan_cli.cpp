#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "skipgan/evaluation.hpp"
#include "skipgan/hash.hpp"
#include "skipgan/model_io.hpp"
#include "skipgan/simcorpus.hpp"
#include "skipgan/synthesis.hpp"

namespace fs = std::filesystem;
using namespace skipgan;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

std::string default_out() {
  const char* root = std::getenv("SKIPGAN_OUTPUT_ROOT");
  return root && *root ? root : ".";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
  if (!out) throw ValidationError("write failed for " + path.string());
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

std::string num(double v) { return nlohmann::json(v).dump(); }

// Train configuration: defaults, then --config, then explicit flags.
struct TrainFlags {
  std::string config_path;
  std::optional<int> epochs, batch_size, q;
  std::optional<double> omega;
  std::optional<std::uint64_t> seed;
  bool no_enforce = false;

  void add(CLI::App* app, bool with_seed) {
    app->add_option("--config", config_path, "Training configuration JSON");
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--batch-size", batch_size, "Condition batch size");
    app->add_option("--q", q, "Generator-step oversampling factor");
    app->add_option("--omega", omega, "Fraction of conditions on the target");
    if (with_seed) app->add_option("--seed", seed, "Master seed");
    app->add_flag("--no-skip-enforcement", no_enforce, "Disable skip-constraint restriction of conditions");
  }

  TrainConfig resolve() const {
    TrainConfig c;
    if (!config_path.empty()) c = train_config_from_json(read_file(config_path), c);
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (q) c.q = *q;
    if (omega) c.omega = *omega;
    if (seed) c.seed = *seed;
    if (no_enforce) c.enforce = false;
    c.validate();
    return c;
  }
};

std::vector<std::uint64_t> resolve_seeds(const std::vector<std::uint64_t>& seeds, int splits, std::uint64_t first) {
  if (!seeds.empty()) return seeds;
  if (splits < 1) throw ValidationError("--splits must be at least 1");
  std::vector<std::uint64_t> out;
  for (int i = 0; i < splits; ++i) out.push_back(first + static_cast<std::uint64_t>(i));
  return out;
}

std::string training_log(const GanModel& m) {
  std::string out = "# config_hash=" + hex64(config_hash(m.config)) + "\n";
  out += "epoch,critic,generator_orig,generator_dstream,classifier,condition_match,mean_assigned\n";
  for (int e = 1; e <= m.state.epochs_completed; ++e) {
    out += std::to_string(e) + "," + num(m.state.epoch_mean(e, &IterationRecord::critic)) + "," +
           num(m.state.epoch_mean(e, &IterationRecord::generator_orig)) + "," +
           num(m.state.epoch_mean(e, &IterationRecord::generator_dstream)) + "," +
           num(m.state.epoch_mean(e, &IterationRecord::classifier)) + "," +
           num(m.state.condition_match[static_cast<std::size_t>(e - 1)]) + "," +
           num(m.state.mean_assigned[static_cast<std::size_t>(e - 1)]) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string spec_path, out = default_out(), mode;
  std::optional<std::uint64_t> seed, structure_seed;
  std::optional<int> rows;
};

int cmd_simulate(const SimulateArgs& a) {
  PopulationSpec spec = a.spec_path.empty() ? PopulationSpec{} : load_population_spec(a.spec_path);
  if (!a.mode.empty()) {
    spec.mode = parse_problem_mode(a.mode);
    if (spec.mode == ProblemMode::B && a.spec_path.empty()) spec.classes = 3;
  }
  if (a.seed) spec.seed = *a.seed;
  if (a.structure_seed) spec.structure_seed = *a.structure_seed;
  if (a.rows) spec.rows = *a.rows;
  spec.validate();
  const Population pop = synthesize_population(spec);
  const fs::path dir = prepare_dir(a.out);
  save_schema(pop.schema, (dir / "schema.json").string());
  write_table(pop.schema, pop.table, (dir / "table.csv").string());
  write_file(dir / "oracle.json", serialize_oracle(pop.oracle, pop.schema));
  const auto pmf = target_pmf(pop.schema, pop.table);
  std::cout << "rows " << pop.table.rows() << "\nfeatures " << pop.schema.num_features() << "\nconstraints "
            << pop.schema.constraints().size() << "\nclass balance";
  for (double p : pmf) std::cout << " " << std::fixed << std::setprecision(4) << p;
  std::cout << "\noracle auroc bound " << oracle_auroc_bound(pop.oracle, pop.schema, pop.table) << "\n";
  return 0;
}

struct TrainArgs {
  std::string schema, table, out = default_out();
  std::optional<std::uint64_t> split_seed;
  double test_fraction = 0.2;
  TrainFlags flags;
};

int cmd_train(const TrainArgs& a) {
  const SurveySchema schema = load_schema(a.schema);
  Table table = read_table(schema, a.table);
  const TrainConfig config = a.flags.resolve();
  const fs::path dir = prepare_dir(a.out);
  if (a.split_seed) {
    const Split sp = stratified_split(schema, table, a.test_fraction, *a.split_seed);
    write_table(schema, table.select(sp.train), (dir / "train.csv").string());
    write_table(schema, table.select(sp.test), (dir / "test.csv").string());
    table = table.select(sp.train);
  }
  const auto t0 = std::chrono::steady_clock::now();
  GanModel model;
  try {
    model = train(schema, table, config, [&](const EpochReport& r) {
      std::cerr << "epoch " << r.epoch << " generator_orig "
                << r.state->epoch_mean(r.epoch, &IterationRecord::generator_orig) << " condition_match "
                << r.state->condition_match.back() << "\n";
    });
  } catch (const TrainingDiverged& e) {
    GanModel partial;
    partial.config = config;
    partial.state = e.state();
    write_file(dir / "training_log.csv", training_log(partial));
    throw;
  }
  save_model(model, (dir / "model.skg").string());
  write_file(dir / "training_log.csv", training_log(model));
  std::cerr << "trained " << model.state.epochs_completed << " epochs in "
            << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  std::cout << "model " << (dir / "model.skg").string() << "\nconfig_hash " << hex64(config_hash(model.config)) << "\n";
  return 0;
}

struct GenerateArgs {
  std::string model, out = default_out(), prefix = "synthetic";
  std::optional<std::size_t> rows;
  int replicates = 1;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  if (a.replicates < 1) throw ValidationError("--replicates must be at least 1");
  GanModel model = load_model(a.model);
  SynthesisSpec spec = default_synthesis_spec(model);
  if (a.rows) spec.rows = *a.rows;
  const fs::path dir = prepare_dir(a.out);
  for (int r = 0; r < a.replicates; ++r) {
    Rng rng(derive_seed(a.seed, {0x6e, static_cast<std::uint64_t>(r)}));
    const Table t = generate_table(model, spec, rng);
    std::ostringstream name;
    name << a.prefix << "_r" << std::setw(2) << std::setfill('0') << r;
    write_table(model.schema, t, (dir / (name.str() + ".csv")).string());
    write_file(dir / (name.str() + ".meta.json"), synthesis_metadata(model, spec, a.seed, r, t));
    std::cout << (dir / (name.str() + ".csv")).string() << "\n";
  }
  return 0;
}

struct EvaluateArgs {
  std::string schema, table, train, test, model, out = default_out();
  std::vector<std::string> synthetic;
  bool external = false, no_shuffled = false;
  std::vector<std::uint64_t> seeds;
  int splits = 5, replicates = 10, jobs = 1;
  std::uint64_t seed = 1;
  TrainFlags flags;
};

// Sidecar checks for synthetic files produced by `generate`.
std::string check_sidecars(const SurveySchema& schema, const std::vector<std::string>& files, bool external) {
  std::string config;
  for (const auto& f : files) {
    const fs::path side = fs::path(f).replace_extension(".meta.json");
    if (!fs::exists(side)) {
      if (external) continue;
      throw ValidationError(f + " has no metadata sidecar; pass --external for third-party tables");
    }
    const auto j = nlohmann::json::parse(read_file(side.string()));
    if (j.at("schema_hash").get<std::string>() != hex64(schema.hash())) {
      throw SchemaMismatchError(f + " was generated for a different schema");
    }
    const auto c = j.at("config_hash").get<std::string>();
    if (!config.empty() && c != config) throw ValidationError(f + " comes from a different training configuration");
    config = c;
  }
  return config;
}

int cmd_evaluate(const EvaluateArgs& a) {
  const SurveySchema schema = load_schema(a.schema);
  EvalOptions eval;
  eval.jobs = a.jobs;
  eval.shuffled_control = !a.no_shuffled;
  EvaluationReport report;
  if (!a.table.empty()) {
    if (!a.train.empty() || !a.synthetic.empty() || !a.model.empty()) {
      throw ValidationError("--table runs the full benchmark; it cannot be combined with --train, --model or --synthetic");
    }
    BenchmarkConfig bc;
    bc.train = a.flags.resolve();
    bc.seeds = resolve_seeds(a.seeds, a.splits, a.seed);
    bc.replicates = a.replicates;
    bc.eval = eval;
    report = run_benchmark(schema, read_table(schema, a.table), bc);
  } else {
    if (a.train.empty() || a.test.empty()) throw ValidationError("either --table or both --train and --test are required");
    if (a.synthetic.empty() == a.model.empty()) throw ValidationError("give exactly one of --synthetic or --model");
    const Table train_t = read_table(schema, a.train), test_t = read_table(schema, a.test);
    std::vector<Table> syn;
    report.source = "external";
    if (!a.model.empty()) {
      GanModel model = load_model(a.model, schema.hash());
      if (model.train_rows() != train_t.rows()) {
        throw ValidationError("model was trained on " + std::to_string(model.train_rows()) + " rows but --train has " +
                              std::to_string(train_t.rows()));
      }
      const auto pmf = target_pmf(schema, train_t);
      for (std::size_t k = 0; k < pmf.size(); ++k) {
        if (std::llround(pmf[k] * static_cast<double>(train_t.rows())) != model.target_counts[k]) {
          throw ValidationError("model target counts do not match --train");
        }
      }
      const auto spec = default_synthesis_spec(model);
      for (int r = 0; r < a.replicates; ++r) {
        Rng rng(derive_seed(a.seed, {0x6e, static_cast<std::uint64_t>(r)}));
        syn.push_back(generate_table(model, spec, rng));
      }
      report.source = "model";
      report.config_hash = hex64(config_hash(model.config));
    } else {
      report.config_hash = check_sidecars(schema, a.synthetic, a.external);
      for (const auto& f : a.synthetic) syn.push_back(read_table(schema, f));
    }
    report.schema_hash = hex64(schema.hash());
    report.replicates = static_cast<int>(syn.size());
    for (const auto& c : eval.zoo) report.classifiers.push_back(c.name);
    report.splits.push_back(evaluate_split(schema, train_t, test_t, syn, eval, a.seed, &report.warnings));
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  const fs::path dir = prepare_dir(a.out);
  const std::string doc = report_to_json(report);
  validate_report_document(doc);
  write_file(dir / "report.json", doc);
  write_file(dir / "plot_data.csv", plot_data_csv(report));
  const auto j = nlohmann::json::parse(doc);
  for (const char* k : {"conflict", "compatibility", "utility", "baseline", "utility_gain"}) {
    std::cout << k << " " << j["metrics"][k]["mean"].get<double>() << " +- " << j["metrics"][k]["stddev"].get<double>() << "\n";
  }
  return 0;
}

struct AblateArgs {
  std::string schema, table, out = default_out();
  std::vector<std::uint64_t> seeds;
  int splits = 5, replicates = 10, jobs = 1, record_epoch = 50;
  std::uint64_t seed = 1;
  TrainFlags flags;
};

int cmd_ablate(const AblateArgs& a) {
  const SurveySchema schema = load_schema(a.schema);
  const Table table = read_table(schema, a.table);
  AblationConfig ac;
  ac.train = a.flags.resolve();
  ac.seeds = resolve_seeds(a.seeds, a.splits, a.seed);
  ac.replicates = a.replicates;
  ac.jobs = a.jobs;
  ac.record_epoch = a.record_epoch;
  const AblationReport r = run_ablation(schema, table, ac);
  const fs::path dir = prepare_dir(a.out);
  write_file(dir / "ablation.json", ablation_to_json(r));
  std::vector<double> ce, cr, le, lr;
  double te = 0, tr = 0;
  for (const auto& row : r.rows) {
    ce.push_back(mean_conflict(row.enforced));
    cr.push_back(mean_conflict(row.relaxed));
    le.push_back(row.enforced.generator_orig_at);
    lr.push_back(row.relaxed.generator_orig_at);
    te += row.enforced.seconds;
    tr += row.relaxed.seconds;
  }
  std::cout << std::fixed << std::setprecision(4) << "model          conflict  orig_loss@" << a.record_epoch
            << "  train_s\n"
            << "enforced       " << median(ce) << "    " << median(le) << "  " << te << "\n"
            << "no-enforcement " << median(cr) << "    " << median(lr) << "  " << tr << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skip-logic-aware conditional GAN for survey tables"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Write a planted survey corpus (schema, table, oracle)");
  s->add_option("--spec", sim.spec_path, "Population spec JSON");
  s->add_option("--seed", sim.seed, "Row seed");
  s->add_option("--structure-seed", sim.structure_seed, "Schema and constraint plan seed");
  s->add_option("--rows", sim.rows, "Row count");
  s->add_option("--mode", sim.mode, "Problem mode A or B");
  s->add_option("--out", sim.out, "Output directory");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the generator");
  t->add_option("--schema", tr.schema)->required();
  t->add_option("--table", tr.table)->required();
  t->add_option("--split-seed", tr.split_seed, "Train on a stratified 80% split and write train.csv/test.csv");
  t->add_option("--test-fraction", tr.test_fraction);
  t->add_option("--out", tr.out);
  tr.flags.add(t, true);

  GenerateArgs ge;
  auto* g = app.add_subcommand("generate", "Sample synthetic tables from a trained model");
  g->add_option("--model", ge.model)->required();
  g->add_option("--rows", ge.rows, "Rows per table (default: training size)");
  g->add_option("--replicates", ge.replicates);
  g->add_option("--seed", ge.seed);
  g->add_option("--prefix", ge.prefix);
  g->add_option("--out", ge.out);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Conflict, compatibility and utility");
  e->add_option("--schema", ev.schema)->required();
  e->add_option("--table", ev.table, "Real table: run the full split/train/generate benchmark");
  e->add_option("--train", ev.train, "Training split (single-split mode)");
  e->add_option("--test", ev.test, "Test split (single-split mode)");
  e->add_option("--model", ev.model, "Generate replicates from this model");
  e->add_option("--synthetic", ev.synthetic, "Synthetic tables");
  e->add_flag("--external", ev.external, "Accept synthetic tables without metadata sidecars");
  e->add_option("--seeds", ev.seeds, "Split seeds")->delimiter(',');
  e->add_option("--splits", ev.splits, "Number of split seeds starting at --seed");
  e->add_option("--seed", ev.seed);
  e->add_option("--replicates", ev.replicates);
  e->add_option("--jobs", ev.jobs, "Parallel benchmark cells");
  e->add_flag("--no-shuffled-control", ev.no_shuffled);
  e->add_option("--out", ev.out);
  ev.flags.add(e, false);

  AblateArgs ab;
  auto* b = app.add_subcommand("ablate", "Paired runs with and without skip-constraint enforcement");
  b->add_option("--schema", ab.schema)->required();
  b->add_option("--table", ab.table)->required();
  b->add_option("--seeds", ab.seeds)->delimiter(',');
  b->add_option("--splits", ab.splits);
  b->add_option("--seed", ab.seed);
  b->add_option("--replicates", ab.replicates);
  b->add_option("--jobs", ab.jobs);
  b->add_option("--record-epoch", ab.record_epoch);
  b->add_option("--out", ab.out);
  ab.flags.add(b, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitValidation;
  }
  try {
    if (*s) return cmd_simulate(sim);
    if (*t) return cmd_train(tr);
    if (*g) return cmd_generate(ge);
    if (*e) return cmd_evaluate(ev);
    if (*b) return cmd_ablate(ab);
  } catch (const ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}
