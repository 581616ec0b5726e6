#include "skipgan/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "skipgan/error.hpp"
#include "skipgan/hash.hpp"
#include "skipgan/metrics.hpp"
#include "skipgan/model_io.hpp"
#include "skipgan/synthesis.hpp"

namespace skipgan {

using nlohmann::ordered_json;

Split stratified_split(const SurveySchema& schema, const Table& table, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1)) throw ValidationError("test fraction must lie in (0, 1)");
  const auto y = static_cast<std::size_t>(schema.target_index());
  const int classes = schema.target().cardinality();
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t r = 0; r < table.rows(); ++r) by_class[static_cast<std::size_t>(table.category(r, y))].push_back(r);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(table.rows()) * test_fraction));
  const auto counts = apportion(n_test, target_pmf(schema, table));
  Rng rng(seed);
  Split s;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& rows = by_class[k];
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto take = std::min(rows.size(), static_cast<std::size_t>(counts[k]));
    s.test.insert(s.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
    s.train.insert(s.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Table shuffle_labels(const SurveySchema& schema, const Table& table, Rng& rng) {
  const auto y = static_cast<std::size_t>(schema.target_index());
  auto labels = table.column(y);
  std::shuffle(labels.begin(), labels.end(), rng);
  Table out = table;
  for (std::size_t r = 0; r < out.rows(); ++r) out(r, y) = labels[r];
  return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t classifier_seed(std::uint64_t split_seed, std::size_t classifier) {
  return derive_seed(split_seed, {0xc1a5, classifier});
}

namespace {

std::vector<int> labels_of(const SurveySchema& schema, const Table& t) {
  std::vector<int> out(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) out[r] = t.category(r, static_cast<std::size_t>(schema.target_index()));
  return out;
}

// One classifier fit; missing on undefined AUROC or training failure.
std::optional<double> score_cell(const ClassifierSpec& spec, const SurveySchema& schema, const Table& train,
                                 const Table& test, const std::vector<int>& test_labels, std::uint64_t seed,
                                 std::string& warning) {
  try {
    auto probs = fit_predict(spec, schema, train, test, seed);
    for (const auto& row : probs) {
      for (double p : row) {
        if (!std::isfinite(p)) throw NumericError("non-finite classifier output");
      }
    }
    auto a = auroc_macro(probs, test_labels);
    if (!a) warning = spec.name + ": AUROC undefined on single-class test labels";
    return a;
  } catch (const std::exception& e) {
    warning = spec.name + ": " + e.what();
    return std::nullopt;
  }
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return summarize(v).mean;
}

std::vector<double> diff_cells(const std::vector<std::vector<std::optional<double>>>& cells,
                               const std::vector<std::optional<double>>& base) {
  std::vector<double> out;
  for (const auto& rep : cells) {
    for (std::size_t c = 0; c < rep.size() && c < base.size(); ++c) {
      if (rep[c] && base[c]) out.push_back(*rep[c] - *base[c]);
    }
  }
  return out;
}

std::vector<double> present(const std::vector<std::vector<std::optional<double>>>& cells, std::optional<std::size_t> only = {}) {
  std::vector<double> out;
  for (const auto& rep : cells) {
    for (std::size_t c = 0; c < rep.size(); ++c) {
      if (rep[c] && (!only || *only == c)) out.push_back(*rep[c]);
    }
  }
  return out;
}

}  // namespace

std::vector<std::optional<double>> zoo_auroc(const std::vector<ClassifierSpec>& zoo, const SurveySchema& schema,
                                             const Table& train, const Table& test, std::uint64_t split_seed, int jobs,
                                             std::vector<std::string>* warnings) {
  const auto labels = labels_of(schema, test);
  std::vector<std::optional<double>> out(zoo.size());
  std::vector<std::string> warn(zoo.size());
  parallel_for(zoo.size(), jobs, [&](std::size_t c) {
    out[c] = score_cell(zoo[c], schema, train, test, labels, classifier_seed(split_seed, c), warn[c]);
  });
  if (warnings) {
    for (auto& w : warn) {
      if (!w.empty()) warnings->push_back(std::move(w));
    }
  }
  return out;
}

SplitReport evaluate_split(const SurveySchema& schema, const Table& train, const Table& test,
                           const std::vector<Table>& synthetic, const EvalOptions& options, std::uint64_t split_seed,
                           std::vector<std::string>* warnings) {
  SplitReport s;
  s.seed = split_seed;
  s.train_rows = train.rows();
  s.test_rows = test.rows();
  const std::size_t reps = synthetic.size(), nc = options.zoo.size();
  std::vector<Table> augmented, shuffled;
  for (std::size_t r = 0; r < reps; ++r) {
    s.conflict.push_back(conflict(schema, synthetic[r]));
    augmented.push_back(augment(schema, train, synthetic[r]).table);
    if (options.shuffled_control) {
      Rng rng(derive_seed(split_seed, {0x5f, r}));
      shuffled.push_back(shuffle_labels(schema, synthetic[r], rng));
    }
  }
  s.baseline.assign(nc, std::nullopt);
  s.synthetic.assign(reps, std::vector<std::optional<double>>(nc));
  s.augmented = s.synthetic;
  if (options.shuffled_control) s.shuffled = s.synthetic;

  // Cells: baseline classifiers, then [role][replicate][classifier] with
  // roles synthetic, augmented, shuffled.
  const std::size_t roles = options.shuffled_control ? 3 : 2;
  const std::size_t n_cells = nc + roles * reps * nc;
  const auto labels = labels_of(schema, test);
  std::vector<std::string> warn(n_cells);
  parallel_for(n_cells, options.jobs, [&](std::size_t k) {
    if (k < nc) {
      s.baseline[k] = score_cell(options.zoo[k], schema, train, test, labels, classifier_seed(split_seed, k), warn[k]);
      return;
    }
    const std::size_t j = k - nc;
    const std::size_t role = j / (reps * nc), r = (j / nc) % reps, c = j % nc;
    const Table& t = role == 0 ? synthetic[r] : role == 1 ? augmented[r] : shuffled[r];
    auto& slot = role == 0 ? s.synthetic[r][c] : role == 1 ? s.augmented[r][c] : s.shuffled[r][c];
    slot = score_cell(options.zoo[c], schema, t, test, labels, classifier_seed(split_seed, c), warn[k]);
  });
  if (warnings) {
    for (auto& w : warn) {
      if (!w.empty()) warnings->push_back("split " + std::to_string(split_seed) + ": " + w);
    }
  }
  return s;
}

std::optional<double> compatibility(const SplitReport& s) { return mean_of(diff_cells(s.synthetic, s.baseline)); }
std::optional<double> shuffled_compatibility(const SplitReport& s) { return mean_of(diff_cells(s.shuffled, s.baseline)); }
std::optional<double> utility(const SplitReport& s) { return mean_of(present(s.augmented)); }
std::optional<double> baseline(const SplitReport& s) { return mean_of(present({s.baseline})); }
std::optional<double> utility_gain(const SplitReport& s) { return mean_of(diff_cells(s.augmented, s.baseline)); }

MetricSummary summarize(std::vector<double> values) {
  MetricSummary m;
  m.count = values.size();
  if (values.empty()) return m;
  std::sort(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    std::vector<double> sq;
    sq.reserve(values.size());
    for (double v : values) sq.push_back((v - m.mean) * (v - m.mean));
    std::sort(sq.begin(), sq.end());
    double ss = 0;
    for (double v : sq) ss += v;
    m.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2;
}

namespace {

std::optional<double> orig_at(const TrainState& st, int epoch) {
  if (st.epochs_completed == 0) return std::nullopt;
  return st.epoch_mean(std::min(epoch, st.epochs_completed), &IterationRecord::generator_orig);
}

TrainConfig hashed_config(TrainConfig c) {
  c.seed = 0;
  return c;
}

}  // namespace

EvaluationReport run_benchmark(const SurveySchema& schema, const Table& table, const BenchmarkConfig& config) {
  if (config.seeds.empty()) throw ValidationError("benchmark needs at least one seed");
  if (config.replicates < 1) throw ValidationError("replicates must be at least 1");
  config.train.validate();
  EvaluationReport report;
  report.source = "model";
  report.schema_hash = hex64(schema.hash());
  report.config_hash = hex64(config_hash(hashed_config(config.train)));
  report.replicates = config.replicates;
  for (const auto& c : config.eval.zoo) report.classifiers.push_back(c.name);

  const std::size_t n = config.seeds.size();
  std::vector<Split> splits(n);
  std::vector<std::vector<Table>> syn(n);
  std::vector<SplitReport> partial(n);
  std::vector<std::string> train_warn(n);
  parallel_for(n, config.eval.jobs, [&](std::size_t i) {
    const auto seed = config.seeds[i];
    splits[i] = stratified_split(schema, table, config.test_fraction, derive_seed(seed, {0x51}));
    TrainConfig tc = config.train;
    tc.seed = derive_seed(seed, {0x7a});
    try {
      GanModel model = train(schema, table.select(splits[i].train), tc);
      partial[i].generator_orig_at_50 = orig_at(model.state, 50);
      partial[i].generator_orig_final = orig_at(model.state, model.state.epochs_completed);
      if (!model.state.condition_match.empty()) partial[i].condition_match_final = model.state.condition_match.back();
      partial[i].generator_checksum = hex64(model.generator_checksum());
      const auto spec = default_synthesis_spec(model);
      for (int r = 0; r < config.replicates; ++r) {
        Rng rng(derive_seed(seed, {0x6e, static_cast<std::uint64_t>(r)}));
        syn[i].push_back(generate_table(model, spec, rng));
      }
      if (config.on_generated) config.on_generated(i, model, table.select(splits[i].train), syn[i]);
    } catch (const NumericError& e) {
      train_warn[i] = "split " + std::to_string(seed) + ": generator failed: " + e.what();
      syn[i].clear();
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!train_warn[i].empty()) report.warnings.push_back(train_warn[i]);
    const Table train_t = table.select(splits[i].train), test_t = table.select(splits[i].test);
    SplitReport s = evaluate_split(schema, train_t, test_t, syn[i], config.eval, config.seeds[i], &report.warnings);
    s.generator_orig_at_50 = partial[i].generator_orig_at_50;
    s.generator_orig_final = partial[i].generator_orig_final;
    s.condition_match_final = partial[i].condition_match_final;
    s.generator_checksum = partial[i].generator_checksum;
    report.splits.push_back(std::move(s));
    syn[i].clear();
  }
  return report;
}

namespace {

ordered_json summary_json(const MetricSummary& m) {
  ordered_json j;
  j["mean"] = m.mean;
  j["stddev"] = m.stddev;
  j["count"] = m.count;
  return j;
}

ordered_json opt_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json cells_json(const std::vector<std::vector<std::optional<double>>>& cells) {
  ordered_json j = ordered_json::array();
  for (const auto& rep : cells) {
    ordered_json row = ordered_json::array();
    for (const auto& v : rep) row.push_back(opt_json(v));
    j.push_back(row);
  }
  return j;
}

struct Pools {
  std::vector<double> conflict, compat, shuffled, util, base, gain;
};

Pools pool_cells(const EvaluationReport& r, std::optional<std::size_t> only = {}) {
  Pools p;
  for (const auto& s : r.splits) {
    p.conflict.insert(p.conflict.end(), s.conflict.begin(), s.conflict.end());
    for (std::size_t c = 0; c < s.baseline.size(); ++c) {
      if (only && *only != c) continue;
      if (s.baseline[c]) p.base.push_back(*s.baseline[c]);
    }
    auto restrict_to = [&](const std::vector<std::vector<std::optional<double>>>& cells) {
      if (!only) return cells;
      auto out = cells;
      for (auto& rep : out) {
        for (std::size_t c = 0; c < rep.size(); ++c) {
          if (c != *only) rep[c].reset();
        }
      }
      return out;
    };
    const auto syn = restrict_to(s.synthetic), aug = restrict_to(s.augmented), shf = restrict_to(s.shuffled);
    for (double v : diff_cells(syn, s.baseline)) p.compat.push_back(v);
    for (double v : diff_cells(shf, s.baseline)) p.shuffled.push_back(v);
    for (double v : diff_cells(aug, s.baseline)) p.gain.push_back(v);
    for (double v : present(aug)) p.util.push_back(v);
  }
  return p;
}

}  // namespace

std::string report_to_json(const EvaluationReport& r) {
  ordered_json j;
  j["format"] = "skipgan-evaluation";
  j["version"] = 1;
  j["source"] = r.source;
  j["schema_hash"] = r.schema_hash;
  j["config_hash"] = r.config_hash;
  j["replicates"] = r.replicates;
  j["classifiers"] = r.classifiers;
  ordered_json seeds = ordered_json::array();
  for (const auto& s : r.splits) seeds.push_back(s.seed);
  j["seeds"] = seeds;

  const Pools all = pool_cells(r);
  ordered_json m;
  m["conflict"] = summary_json(summarize(all.conflict));
  m["compatibility"] = summary_json(summarize(all.compat));
  m["shuffled_compatibility"] = summary_json(summarize(all.shuffled));
  m["utility"] = summary_json(summarize(all.util));
  m["baseline"] = summary_json(summarize(all.base));
  m["utility_gain"] = summary_json(summarize(all.gain));
  j["metrics"] = m;

  ordered_json per = ordered_json::array();
  for (std::size_t c = 0; c < r.classifiers.size(); ++c) {
    const Pools p = pool_cells(r, c);
    ordered_json e;
    e["name"] = r.classifiers[c];
    e["compatibility"] = summary_json(summarize(p.compat));
    e["utility"] = summary_json(summarize(p.util));
    e["baseline"] = summary_json(summarize(p.base));
    per.push_back(e);
  }
  j["per_classifier"] = per;

  ordered_json splits = ordered_json::array();
  for (const auto& s : r.splits) {
    ordered_json e;
    e["seed"] = s.seed;
    e["train_rows"] = s.train_rows;
    e["test_rows"] = s.test_rows;
    e["conflict"] = s.conflict;
    e["compatibility"] = opt_json(compatibility(s));
    e["shuffled_compatibility"] = opt_json(shuffled_compatibility(s));
    e["utility"] = opt_json(utility(s));
    e["baseline"] = opt_json(baseline(s));
    e["utility_gain"] = opt_json(utility_gain(s));
    ordered_json base = ordered_json::array();
    for (const auto& v : s.baseline) base.push_back(opt_json(v));
    e["baseline_auroc"] = base;
    e["synthetic_auroc"] = cells_json(s.synthetic);
    e["augmented_auroc"] = cells_json(s.augmented);
    e["shuffled_auroc"] = cells_json(s.shuffled);
    ordered_json g;
    g["orig_loss_at_50"] = opt_json(s.generator_orig_at_50);
    g["orig_loss_final"] = opt_json(s.generator_orig_final);
    g["condition_match_final"] = opt_json(s.condition_match_final);
    g["checksum"] = s.generator_checksum;
    e["generator"] = g;
    splits.push_back(e);
  }
  j["splits"] = splits;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string plot_data_csv(const EvaluationReport& r) {
  std::string out = "panel,classifier,mean,stddev,count,baseline\n";
  auto num = [](double v) {
    ordered_json j = v;
    return j.dump();
  };
  auto line = [&](const std::string& panel, const std::string& name, const Pools& p, bool with_base) {
    const auto m = summarize(panel == "compatibility" ? p.compat : p.util);
    out += panel + "," + name + "," + num(m.mean) + "," + num(m.stddev) + "," + std::to_string(m.count) + ",";
    if (with_base) out += num(summarize(p.base).mean);
    out += "\n";
  };
  for (const char* panel : {"compatibility", "utility"}) {
    for (std::size_t c = 0; c < r.classifiers.size(); ++c) line(panel, r.classifiers[c], pool_cells(r, c), std::string(panel) == "utility");
    line(panel, "all", pool_cells(r), std::string(panel) == "utility");
  }
  return out;
}

namespace {

void require(const ordered_json& j, const std::string& path, bool ok) {
  if (!ok) throw FormatError("report field " + path + " is missing or has the wrong type");
  (void)j;
}

void require_summary(const ordered_json& j, const std::string& path) {
  require(j, path, j.is_object() && j.contains("mean") && j["mean"].is_number() && j.contains("stddev") &&
                       j["stddev"].is_number() && j.contains("count") && j["count"].is_number_unsigned());
}

bool number_or_null(const ordered_json& v) { return v.is_number() || v.is_null(); }

void require_cells(const ordered_json& j, const std::string& path) {
  require(j, path, j.is_array());
  for (const auto& row : j) {
    require(j, path, row.is_array());
    for (const auto& v : row) require(j, path, number_or_null(v));
  }
}

}  // namespace

void validate_report_document(std::string_view document) {
  ordered_json j;
  try {
    j = ordered_json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what());
  }
  require(j, "/", j.is_object());
  require(j, "/format", j.contains("format") && j["format"] == "skipgan-evaluation");
  require(j, "/version", j.contains("version") && j["version"] == 1);
  for (const char* k : {"source", "schema_hash", "config_hash"}) require(j, std::string("/") + k, j.contains(k) && j[k].is_string());
  require(j, "/replicates", j.contains("replicates") && j["replicates"].is_number_unsigned());
  require(j, "/classifiers", j.contains("classifiers") && j["classifiers"].is_array());
  require(j, "/seeds", j.contains("seeds") && j["seeds"].is_array());
  require(j, "/metrics", j.contains("metrics") && j["metrics"].is_object());
  for (const char* k : {"conflict", "compatibility", "shuffled_compatibility", "utility", "baseline", "utility_gain"}) {
    require(j, std::string("/metrics/") + k, j["metrics"].contains(k));
    require_summary(j["metrics"][k], std::string("/metrics/") + k);
  }
  require(j, "/per_classifier", j.contains("per_classifier") && j["per_classifier"].is_array());
  for (const auto& e : j["per_classifier"]) {
    require(j, "/per_classifier/name", e.contains("name") && e["name"].is_string());
    for (const char* k : {"compatibility", "utility", "baseline"}) {
      require(j, std::string("/per_classifier/") + k, e.contains(k));
      require_summary(e[k], std::string("/per_classifier/") + k);
    }
  }
  require(j, "/splits", j.contains("splits") && j["splits"].is_array());
  const auto reps = j["replicates"].get<std::size_t>();
  for (const auto& s : j["splits"]) {
    for (const char* k : {"seed", "train_rows", "test_rows"}) require(j, std::string("/splits/") + k, s.contains(k) && s[k].is_number_unsigned());
    require(j, "/splits/conflict", s.contains("conflict") && s["conflict"].is_array());
    require(j, "/splits/conflict", s["conflict"].empty() || s["conflict"].size() == reps);
    for (const auto& v : s["conflict"]) require(j, "/splits/conflict", v.is_number() && v >= 0 && v <= 1);
    for (const char* k : {"compatibility", "shuffled_compatibility", "utility", "baseline", "utility_gain"}) {
      require(j, std::string("/splits/") + k, s.contains(k) && number_or_null(s[k]));
    }
    require(j, "/splits/baseline_auroc", s.contains("baseline_auroc") && s["baseline_auroc"].is_array());
    for (const char* k : {"synthetic_auroc", "augmented_auroc", "shuffled_auroc"}) {
      require(j, std::string("/splits/") + k, s.contains(k));
      require_cells(s[k], std::string("/splits/") + k);
    }
    require(j, "/splits/generator", s.contains("generator") && s["generator"].is_object());
  }
  require(j, "/warnings", j.contains("warnings") && j["warnings"].is_array());
}

// ---------------------------------------------------------------------------

AblationReport run_ablation(const SurveySchema& schema, const Table& table, const AblationConfig& config) {
  if (config.seeds.empty()) throw ValidationError("ablation needs at least one seed");
  if (config.replicates < 1) throw ValidationError("replicates must be at least 1");
  config.train.validate();
  AblationReport report;
  report.schema_hash = hex64(schema.hash());
  TrainConfig base = hashed_config(config.train);
  base.enforce = true;
  report.config_hash = hex64(config_hash(base));
  report.record_epoch = config.record_epoch;
  report.rows.resize(config.seeds.size());
  parallel_for(2 * config.seeds.size(), config.jobs, [&](std::size_t k) {
    const std::size_t i = k / 2;
    const bool enforce = k % 2 == 0;
    const auto seed = config.seeds[i];
    const Split sp = stratified_split(schema, table, config.test_fraction, derive_seed(seed, {0x51}));
    TrainConfig tc = config.train;
    tc.seed = derive_seed(seed, {0x7a});
    tc.enforce = enforce;
    AblationArm arm;
    const auto t0 = std::chrono::steady_clock::now();
    GanModel model = train(schema, table.select(sp.train), tc);
    arm.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    arm.generator_orig_at = *orig_at(model.state, config.record_epoch);
    arm.generator_orig_final = *orig_at(model.state, model.state.epochs_completed);
    arm.condition_match_first = model.state.condition_match.front();
    arm.condition_match_final = model.state.condition_match.back();
    arm.generator_checksum = hex64(model.generator_checksum());
    const auto spec = default_synthesis_spec(model);
    for (int r = 0; r < config.replicates; ++r) {
      Rng rng(derive_seed(seed, {0x6e, static_cast<std::uint64_t>(r)}));
      arm.conflict.push_back(conflict(schema, generate_table(model, spec, rng)));
    }
    report.rows[i].seed = seed;
    (enforce ? report.rows[i].enforced : report.rows[i].relaxed) = std::move(arm);
  });
  return report;
}

double mean_conflict(const AblationArm& arm) { return summarize(arm.conflict).mean; }

std::string ablation_to_json(const AblationReport& r) {
  ordered_json j;
  j["format"] = "skipgan-ablation";
  j["version"] = 1;
  j["schema_hash"] = r.schema_hash;
  j["config_hash"] = r.config_hash;
  j["record_epoch"] = r.record_epoch;
  const std::string at = "orig_loss_at_" + std::to_string(r.record_epoch);
  auto arm_json = [&](const AblationArm& a) {
    ordered_json e;
    e["conflict_mean"] = mean_conflict(a);
    e["conflict"] = a.conflict;
    e[at] = a.generator_orig_at;
    e["orig_loss_final"] = a.generator_orig_final;
    e["condition_match_first"] = a.condition_match_first;
    e["condition_match_final"] = a.condition_match_final;
    e["checksum"] = a.generator_checksum;
    return e;
  };
  std::vector<double> ce, cr, le, lr;
  ordered_json rows = ordered_json::array();
  for (const auto& row : r.rows) {
    ordered_json e;
    e["seed"] = row.seed;
    e["enforced"] = arm_json(row.enforced);
    e["relaxed"] = arm_json(row.relaxed);
    rows.push_back(e);
    ce.push_back(mean_conflict(row.enforced));
    cr.push_back(mean_conflict(row.relaxed));
    le.push_back(row.enforced.generator_orig_at);
    lr.push_back(row.relaxed.generator_orig_at);
  }
  j["rows"] = rows;
  ordered_json s;
  if (!r.rows.empty()) {
    s["median_conflict_enforced"] = median(ce);
    s["median_conflict_relaxed"] = median(cr);
    s["median_" + at + "_enforced"] = median(le);
    s["median_" + at + "_relaxed"] = median(lr);
  }
  j["summary"] = s;
  return j.dump(2) + "\n";
}

}  // namespace skipgan
