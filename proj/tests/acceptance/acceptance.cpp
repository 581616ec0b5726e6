// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "../support/fixtures.hpp"
#include "skipgan/conditioning.hpp"
#include "skipgan/evaluation.hpp"
#include "skipgan/metrics.hpp"
#include "skipgan/networks.hpp"
#include "skipgan/simcorpus.hpp"
#include "skipgan/synthesis.hpp"
#include "skipgan/transform.hpp"

using namespace skipgan;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;
double benchmark_minutes = 0;
std::map<int, std::string> verdicts;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  const std::string line = std::string(ok ? "PASS" : "FAIL") + " [" + std::to_string(id) + "] " + name + ": " + detail;
  std::cout << line << std::endl;
  verdicts[id] = line;
  if (!ok) ++failures;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::scientific << v;
  return os.str();
}

std::vector<int> class_counts(const SurveySchema& s, const Table& t) {
  std::vector<int> c(static_cast<std::size_t>(s.target().cardinality()));
  for (std::size_t r = 0; r < t.rows(); ++r) ++c[static_cast<std::size_t>(t.category(r, static_cast<std::size_t>(s.target_index())))];
  return c;
}

// ---------------------------------------------------------------------------

void conflict_oracle() {
  const auto t0 = Clock::now();
  int mismatched = 0, zero_disagreements = 0;
  double worst = 0;
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    const auto s = testing::random_schema(derive_seed(0xacc1, {trial}));
    Rng rng(derive_seed(0xacc1, {trial, 1}));
    Table t(static_cast<std::size_t>(s.num_features()));
    const int rows = std::uniform_int_distribution<int>(1, 50)(rng);
    // A third of the tables conform exactly, the rest are partly repaired.
    const int mode = static_cast<int>(trial % 3);
    for (int r = 0; r < rows; ++r) {
      auto row = testing::random_row(s, rng);
      if (mode == 0 || (mode == 1 && std::bernoulli_distribution(0.7)(rng))) testing::conform(s, row);
      t.append_row(row);
    }
    const double c = conflict(s, t);
    bool any_violation = false;
    for (std::size_t r = 0; r < t.rows(); ++r) any_violation |= !validate_row(s, t.row(r)).empty();
    if ((c == 0.0) == any_violation) ++zero_disagreements;
    const double err = std::abs(c - testing::brute_force_conflict(s, t));
    worst = std::max(worst, err);
    if (err > 1e-12) ++mismatched;
  }
  const double secs = seconds_since(t0);
  report(1, "conflict-oracle equivalence", mismatched == 0 && zero_disagreements == 0 && secs < 60,
         "1000 tables, max |diff| " + std::to_string(worst) + ", zero-iff-valid disagreements " +
             std::to_string(zero_disagreements) + ", " + fmt(secs, 1) + " s");
}

void restriction_correctness() {
  const auto t0 = Clock::now();
  int pairs = 0, invalid = 0, not_idempotent = 0, not_closed = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto s = testing::random_schema(derive_seed(0xacc2, {k}));
    Rng rng(derive_seed(0xacc2, {k, 1}));
    for (int f : s.categorical_features()) {
      for (int cat = 0; cat < s.feature(f).cardinality(); ++cat) {
        ++pairs;
        const auto c = restrict(make_cond(s, f, cat), s);
        // Assigned features written over a random row: no triggered
        // constraint with an assigned imposer may fail at an assigned feature.
        auto row = testing::random_row(s, rng);
        std::set<int> assigned;
        for (const auto& e : c.assigned) {
          row[static_cast<std::size_t>(e.feature)] = e.category;
          assigned.insert(e.feature);
        }
        bool ok = true;
        for (const auto& v : validate_row(s, row)) {
          const auto& k = s.constraints()[static_cast<std::size_t>(v.constraint)];
          if (!assigned.count(k.imposer)) continue;
          for (int p : v.positions) ok &= !assigned.count(k.chain[static_cast<std::size_t>(p)].feature);
        }
        if (!ok) ++invalid;
        if (!(restrict(c, s).assigned == c.assigned)) ++not_idempotent;
        std::set<std::pair<int, int>> got;
        for (const auto& e : c.assigned) got.insert({e.feature, e.category});
        if (got != testing::brute_force_closure(s, f, cat)) ++not_closed;
      }
    }
  }
  const double secs = seconds_since(t0);
  report(2, "restriction correctness", invalid == 0 && not_idempotent == 0 && not_closed == 0 && secs < 60,
         std::to_string(pairs) + " (feature, category) pairs; invalid " + std::to_string(invalid) + ", non-idempotent " +
             std::to_string(not_idempotent) + ", closure mismatches " + std::to_string(not_closed) + ", " +
             fmt(secs, 1) + " s");
}

// ---------------------------------------------------------------------------

void ablation() {
  const auto pop = synthesize_population(PopulationSpec{});
  AblationConfig cfg;
  cfg.jobs = 1;  // arms timed back to back on one worker
  const auto t0 = Clock::now();
  const auto r = run_ablation(pop.schema, pop.table, cfg);
  const double secs = seconds_since(t0);

  std::vector<double> ce, cr, le, lr, first, last;
  double te = 0, tr = 0;
  for (const auto& row : r.rows) {
    ce.push_back(mean_conflict(row.enforced));
    cr.push_back(mean_conflict(row.relaxed));
    le.push_back(row.enforced.generator_orig_at);
    lr.push_back(row.relaxed.generator_orig_at);
    first.push_back(row.enforced.condition_match_first);
    last.push_back(row.enforced.condition_match_final);
    te += row.enforced.seconds;
    tr += row.relaxed.seconds;
    std::cout << "  seed " << row.seed << ": conflict " << fmt(ce.back()) << " vs " << fmt(cr.back()) << ", L_orig@"
              << r.record_epoch << " " << fmt(le.back()) << " vs " << fmt(lr.back()) << ", train s "
              << fmt(row.enforced.seconds, 1) << " vs " << fmt(row.relaxed.seconds, 1) << std::endl;
  }
  const double mce = median(ce), mcr = median(cr), mle = median(le), mlr = median(lr);
  report(3, "ablation direction", mce < mcr && mle < mlr && secs <= 30 * 60,
         "median conflict " + fmt(mce) + " < " + fmt(mcr) + ", median L_orig@50 " + fmt(mle) + " < " + fmt(mlr) + ", " +
             std::to_string(r.rows.size()) + " seeds, " + fmt(secs / 60, 1) + " min");
  const double overhead = te / tr - 1;
  report(9, "enforcement overhead", std::abs(overhead) <= 0.10,
         "enforced " + fmt(te, 1) + " s vs non-enforced " + fmt(tr, 1) + " s (" + fmt(100 * overhead, 1) + "%)");
  std::cout << "INFO condition match epoch 1 -> final (median, enforced): " << fmt(median(first)) << " -> "
            << fmt(median(last)) << (median(last) > median(first) ? " (rises)" : " (does not rise)") << std::endl;
}

// ---------------------------------------------------------------------------

struct ModeOutcome {
  bool utility_ok = false, compat_ok = false;
  std::string utility_detail, compat_detail;
};

int generated_tables = 0, apportion_failures = 0;
bool spans_ok = true;
double worst_span = 0;

ModeOutcome benchmark(ProblemMode mode) {
  PopulationSpec spec;
  spec.mode = mode;
  if (mode == ProblemMode::B) spec.classes = 3;
  const auto pop = synthesize_population(spec);
  const double bound = oracle_auroc_bound(pop.oracle, pop.schema, pop.table);

  BenchmarkConfig cfg;
  std::mutex m;
  cfg.on_generated = [&](std::size_t split, GanModel& model, const Table& train, const std::vector<Table>& reps) {
    const auto want = testing::brute_force_apportion(train.rows(), class_counts(pop.schema, train));
    std::lock_guard lock(m);
    for (const auto& t : reps) {
      ++generated_tables;
      if (t.rows() != train.rows() || class_counts(pop.schema, t) != want) ++apportion_failures;
    }
    if (split != 0) return;
    // Activated generator output for every category of every feature.
    Rng rng(derive_seed(0xacc7, {static_cast<std::uint64_t>(mode == ProblemMode::B)}));
    std::vector<CondVector> conds;
    for (int f : pop.schema.categorical_features()) {
      for (int k = 0; k < pop.schema.feature(f).cardinality(); ++k) conds.push_back(restrict(make_cond(pop.schema, f, k), pop.schema));
    }
    const Mat act = sample_generator(model, conds, rng);
    for (const auto& sp : output_spans(pop.schema, model.transformer.layout())) {
      if (sp.kind != OutputSpan::Kind::softmax) continue;
      for (Eigen::Index r = 0; r < act.rows(); ++r) {
        const double dev = std::abs(static_cast<double>(act.row(r).segment(sp.offset, sp.width).sum()) - 1.0);
        worst_span = std::max(worst_span, dev);
        spans_ok &= dev <= 1e-5;
      }
    }
  };
  const auto t0 = Clock::now();
  const auto rep = run_benchmark(pop.schema, pop.table, cfg);
  const double secs = seconds_since(t0);
  for (const auto& w : rep.warnings) std::cout << "  warning: " << w << std::endl;

  std::vector<double> gains, baselines;
  bool compat_ok = rep.splits.size() == cfg.seeds.size();
  std::string per_seed;
  for (const auto& s : rep.splits) {
    const auto g = utility_gain(s), b = baseline(s), c = compatibility(s), sc = shuffled_compatibility(s);
    if (g) gains.push_back(*g);
    if (b) baselines.push_back(*b);
    const bool ok = c && sc && *c < 0 && std::abs(*c) < std::abs(*sc);
    compat_ok &= ok;
    std::cout << "  mode " << to_string(mode) << " seed " << s.seed << ": baseline " << (b ? fmt(*b) : "n/a")
              << ", utility gain " << (g ? fmt(*g) : "n/a") << ", compatibility " << (c ? fmt(*c) : "n/a")
              << ", shuffled " << (sc ? fmt(*sc) : "n/a") << ", conflict " << fmt(summarize(s.conflict).mean)
              << std::endl;
    per_seed += (per_seed.empty() ? "" : " ") + (c ? fmt(*c, 3) : "n/a") + "/" + (sc ? fmt(*sc, 3) : "n/a");
  }
  const double base = summarize(baselines).mean;
  const double gain = gains.empty() ? 0.0 : median(gains);
  ModeOutcome o;
  o.utility_ok = bound >= 0.85 && base <= bound - 0.1 && gains.size() >= 5 && gain > 0;
  o.utility_detail = "mode " + to_string(mode) + ": bound " + fmt(bound) + ", baseline " + fmt(base) + ", median gain " +
                     fmt(gain) + " over " + std::to_string(gains.size()) + " seeds, " + fmt(secs / 60, 1) + " min";
  o.compat_ok = compat_ok;
  o.compat_detail = "mode " + to_string(mode) + " compat/shuffled per seed " + per_seed;
  benchmark_minutes += secs / 60;
  return o;
}

// ---------------------------------------------------------------------------

double gp_relative_error() {
  Rng rng(derive_seed(0xacc7, {1}));
  const int dim = 9, pac = 3, groups = 6;
  Critic<double> critic(dim, pac, 24, 0.5, rng);
  nn::Matrix<double> real(groups, dim * pac), fake(groups, dim * pac);
  std::normal_distribution<double> z;
  for (Eigen::Index i = 0; i < real.size(); ++i) real.data()[i] = z(rng);
  for (Eigen::Index i = 0; i < fake.size(); ++i) fake.data()[i] = z(rng);
  auto penalty = [&](bool accumulate) {
    Rng r(7);
    return critic.gradient_penalty(real, fake, 10.0, r, accumulate);
  };
  auto params = critic.parameters();
  for (auto* p : params) p->zero_grad();
  penalty(true);
  double worst = 0;
  for (auto* p : params) {
    nn::Matrix<double> numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double keep = p->value.data()[i];
      p->value.data()[i] = keep + 1e-6;
      const double up = penalty(false);
      p->value.data()[i] = keep - 1e-6;
      const double down = penalty(false);
      p->value.data()[i] = keep;
      numeric.data()[i] = (up - down) / 2e-6;
    }
    const double scale = std::max({p->grad.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-12});
    worst = std::max(worst, (p->grad - numeric).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

double auroc_worst_error() {
  Rng rng(derive_seed(0xacc7, {2}));
  std::uniform_real_distribution<double> u;
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 200)(rng);
    std::vector<double> s(static_cast<std::size_t>(n));
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      s[static_cast<std::size_t>(i)] = trial % 2 ? u(rng) : std::floor(u(rng) * 6);
      y[static_cast<std::size_t>(i)] = u(rng) < 0.5;
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(*auroc(s, y) - testing::brute_force_auroc(s, y)));
  }
  return worst;
}

// Returns {categorical mismatches, worst continuous relative error}.
std::pair<int, double> round_trip() {
  int bad = 0;
  double worst = 0;
  auto check = [&](const SurveySchema& s, const Table& t) {
    const auto tr = DataTransformer::fit(s, t);
    const auto back = tr.decode(tr.encode(t));
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (int f = 0; f < s.num_features(); ++f) {
        const double a = t(r, static_cast<std::size_t>(f)), b = back(r, static_cast<std::size_t>(f));
        if (s.feature(f).is_categorical()) {
          bad += a != b;
        } else {
          worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-300));
        }
      }
    }
  };
  for (auto mode : {ProblemMode::A, ProblemMode::B}) {
    PopulationSpec spec;
    spec.mode = mode;
    if (mode == ProblemMode::B) spec.classes = 3;
    const auto pop = synthesize_population(spec);
    check(pop.schema, pop.table);
  }
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto s = testing::random_schema(derive_seed(0xacc7, {3, k}));
    Rng rng(k);
    Table t(static_cast<std::size_t>(s.num_features()));
    for (int r = 0; r < 200; ++r) {
      auto row = testing::random_row(s, rng);
      testing::conform(s, row);
      t.append_row(row);
    }
    check(s, t);
  }
  return {bad, worst};
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SKIPGAN_CLI_PATH) + " " + args + " >>'" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void reproducibility() {
  const auto root = fs::temp_directory_path() / "skipgan_acceptance";
  fs::remove_all(root);
  bool ran = true;
  for (const char* run : {"a", "b"}) {
    const auto d = root / run;
    fs::create_directories(d);
    std::ofstream(d / "config.json") << R"({"epochs": 3})";
    const auto log = d / "cli.log";
    auto p = [&](const char* rel) { return "'" + (d / rel).string() + "'"; };
    ran &= run_cli("simulate --out " + p("sim"), log) == 0;
    ran &= run_cli("train --schema " + p("sim/schema.json") + " --table " + p("sim/table.csv") +
                       " --split-seed 1 --seed 2 --config " + p("config.json") + " --out " + p("model"),
                   log) == 0;
    ran &= run_cli("generate --model " + p("model/model.skg") + " --replicates 3 --seed 4 --out " + p("gen"), log) == 0;
    ran &= run_cli("evaluate --schema " + p("sim/schema.json") + " --train " + p("model/train.csv") + " --test " +
                       p("model/test.csv") + " --model " + p("model/model.skg") + " --replicates 2 --seed 5 --out " +
                       p("eval"),
                   log) == 0;
    ran &= run_cli("ablate --schema " + p("sim/schema.json") + " --table " + p("sim/table.csv") + " --config " +
                       p("config.json") + " --seeds 1,2 --replicates 2 --record-epoch 2 --out " + p("ablate"),
                   log) == 0;
  }
  int files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file() || e.path().filename() == "cli.log") continue;
    const auto rel = fs::relative(e.path(), root / "a");
    ++files;
    if (!fs::exists(root / "b" / rel) || slurp(e.path()) != slurp(root / "b" / rel)) {
      ++differing;
      std::cout << "  differs: " << rel.string() << std::endl;
    }
  }
  report(8, "byte-identical reruns", ran && files >= 15 && differing == 0,
         std::to_string(files) + " artifacts over simulate/train/generate/evaluate/ablate, " + std::to_string(differing) +
             " differ" + (ran ? "" : "; a CLI stage failed (see " + (root / "a/cli.log").string() + ")"));
}

}  // namespace

int main() {
  std::cout << "skipgan acceptance" << std::endl;
  conflict_oracle();
  restriction_correctness();

  const double gp = gp_relative_error();
  const double au = auroc_worst_error();
  const auto [cat_bad, cont_worst] = round_trip();

  reproducibility();
  ablation();

  const auto a = benchmark(ProblemMode::A);
  const auto b = benchmark(ProblemMode::B);
  report(4, "utility direction", a.utility_ok && b.utility_ok && benchmark_minutes <= 60,
         a.utility_detail + "; " + b.utility_detail);
  report(5, "compatibility band", a.compat_ok && b.compat_ok, a.compat_detail + "; " + b.compat_detail);
  report(6, "synthesis size and class counts", generated_tables > 0 && apportion_failures == 0,
         std::to_string(generated_tables) + " generated tables, " + std::to_string(apportion_failures) + " mismatches");
  report(7, "numerical suite", gp < 1e-3 && au <= 1e-12 && cat_bad == 0 && cont_worst <= 1e-6 && spans_ok,
         "GP FD rel err " + sci(gp) + ", AUROC max diff " + sci(au) + ", categorical round-trip mismatches " +
             std::to_string(cat_bad) + ", continuous rel err " + sci(cont_worst) + ", span sum max dev " +
             sci(worst_span));

  std::cout << "\nsummary" << std::endl;
  for (const auto& [id, line] : verdicts) std::cout << line << std::endl;
  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL") << std::endl;
  return failures == 0 ? 0 : 1;
}
