#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "skipgan/classifiers.hpp"
#include "skipgan/gan.hpp"

namespace skipgan {

struct Split {
  std::vector<std::size_t> train, test;  // ascending row indices
};

/// Stratified on the target: the test size is round(n * test_fraction),
/// apportioned over classes by largest remainder; rows within each class are
/// drawn by a seeded shuffle.
Split stratified_split(const SurveySchema& schema, const Table& table, double test_fraction, std::uint64_t seed);

/// Same rows with the target column permuted.
Table shuffle_labels(const SurveySchema& schema, const Table& table, Rng& rng);

/// Runs fn(0..n-1) on up to `jobs` threads. Exceptions are rethrown after
/// all workers finish (the first one by index wins).
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Classifier seed shared by every cell of one split, so a classifier sees
/// the same random stream whichever table it is trained on.
std::uint64_t classifier_seed(std::uint64_t split_seed, std::size_t classifier);

/// Test-set AUROC of every zoo member trained on `train` (missing when the
/// test labels hold a single class or training fails).
std::vector<std::optional<double>> zoo_auroc(const std::vector<ClassifierSpec>& zoo, const SurveySchema& schema,
                                             const Table& train, const Table& test, std::uint64_t split_seed,
                                             int jobs = 1, std::vector<std::string>* warnings = nullptr);

/// Scores for one (train, test) split and its synthetic replicates.
struct SplitReport {
  std::uint64_t seed = 0;
  std::size_t train_rows = 0, test_rows = 0;
  /// Per replicate.
  std::vector<double> conflict;
  /// Per classifier.
  std::vector<std::optional<double>> baseline;
  /// [replicate][classifier]
  std::vector<std::vector<std::optional<double>>> synthetic, augmented, shuffled;
  /// Training summary when the split's generator was trained here.
  std::optional<double> generator_orig_at_50, generator_orig_final, condition_match_final;
  std::string generator_checksum;
};

struct EvalOptions {
  std::vector<ClassifierSpec> zoo = default_zoo();
  /// Also score label-shuffled copies of each replicate.
  bool shuffled_control = true;
  int jobs = 1;
};

SplitReport evaluate_split(const SurveySchema& schema, const Table& train, const Table& test,
                           const std::vector<Table>& synthetic, const EvalOptions& options, std::uint64_t split_seed,
                           std::vector<std::string>* warnings = nullptr);

/// Per-split aggregates. Compatibility and utility gain difference each
/// (classifier, replicate) cell against the classifier's baseline, then
/// average; missing cells are skipped.
std::optional<double> compatibility(const SplitReport& s);
std::optional<double> shuffled_compatibility(const SplitReport& s);
std::optional<double> utility(const SplitReport& s);
std::optional<double> baseline(const SplitReport& s);
std::optional<double> utility_gain(const SplitReport& s);

struct MetricSummary {
  double mean = 0;
  double stddev = 0;  // sample standard deviation; 0 for one value
  std::size_t count = 0;
};

/// Order-independent: values are sorted before summation.
MetricSummary summarize(std::vector<double> values);
double median(std::vector<double> values);

struct BenchmarkConfig {
  TrainConfig train;  // seed replaced per split
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int replicates = 10;
  double test_fraction = 0.2;
  EvalOptions eval;
  /// Called once per split after generation with (split index, model,
  /// training table, replicates). May run on worker threads.
  std::function<void(std::size_t, GanModel&, const Table&, const std::vector<Table>&)> on_generated;
};

struct EvaluationReport {
  std::string source;  // "model" or "external"
  std::string schema_hash, config_hash;
  int replicates = 0;
  std::vector<std::string> classifiers;
  std::vector<SplitReport> splits;
  std::vector<std::string> warnings;
};

/// Split, train, generate, score for every seed.
EvaluationReport run_benchmark(const SurveySchema& schema, const Table& table, const BenchmarkConfig& config);

/// Report JSON: metadata, per-metric summaries over all cells, per-classifier
/// breakdown, per-split detail.
std::string report_to_json(const EvaluationReport& report);
/// CSV rows: panel,classifier,mean,stddev,count,baseline.
std::string plot_data_csv(const EvaluationReport& report);
/// Throws FormatError naming the first missing or mistyped field.
void validate_report_document(std::string_view document);

// ---------------------------------------------------------------------------

struct AblationArm {
  std::vector<double> conflict;  // per replicate
  double generator_orig_at = 0;  // epoch mean at AblationConfig::record_epoch
  double generator_orig_final = 0;
  double condition_match_first = 0;
  double condition_match_final = 0;
  std::string generator_checksum;
  double seconds = 0;  // wall clock; not serialized
};

struct AblationRow {
  std::uint64_t seed = 0;
  AblationArm enforced, relaxed;
};

struct AblationConfig {
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int replicates = 10;
  double test_fraction = 0.2;
  int record_epoch = 50;
  int jobs = 1;
};

struct AblationReport {
  std::string schema_hash, config_hash;
  int record_epoch = 50;
  std::vector<AblationRow> rows;
};

/// Paired runs per seed on the same split and training seed, with and
/// without skip-constraint restriction.
AblationReport run_ablation(const SurveySchema& schema, const Table& table, const AblationConfig& config);
double mean_conflict(const AblationArm& arm);
std::string ablation_to_json(const AblationReport& report);

}  // namespace skipgan
