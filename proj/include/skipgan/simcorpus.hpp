#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skipgan/schema.hpp"
#include "skipgan/table.hpp"

namespace skipgan {

enum class ProblemMode { A, B };

std::string to_string(ProblemMode mode);
ProblemMode parse_problem_mode(std::string_view s);

/// Survey population plan. `structure_seed` fixes the schema and the planted
/// coefficients; `seed` only drives respondent sampling, so two specs that
/// differ in `seed` share one schema and one generative model.
struct PopulationSpec {
  int rows = 258;
  int continuous = 2;
  /// Categorical features other than the target.
  int categorical = 147;
  double ordinal_fraction = 0.35;
  int ordinal_levels = 8;
  int min_cardinality = 2;
  int max_cardinality = 4;

  int constraints = 26;
  int min_chain = 1;
  int max_chain = 4;
  /// Probability that a skip block nests a second-level gate in its chain.
  double nest_probability = 0.35;
  /// Share of constraints forcing a regular category instead of BLANK.
  double value_force_fraction = 0.15;
  double min_trigger_rate = 0.2;
  double max_trigger_rate = 0.5;

  int latent_factors = 4;
  ProblemMode mode = ProblemMode::A;
  int classes = 2;
  std::vector<double> priors;  // empty: uniform
  int signal_features = 24;
  double chain_signal_fraction = 0.5;
  double effect = 1.5;
  /// Label temperature: y ~ softmax(score / noise); 0 means argmax.
  double noise = 1.0;

  std::uint64_t structure_seed = 20240601;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const PopulationSpec&, const PopulationSpec&) = default;
};

/// JSON with every field optional; unknown fields are rejected with their name.
PopulationSpec parse_population_spec(std::string_view document);
PopulationSpec load_population_spec(const std::string& path);
std::string serialize_population_spec(const PopulationSpec& spec);

/// One additive term of a class score.
struct SignalTerm {
  enum class Kind { indicator, ordinal, linear };
  int feature = 0;
  Kind kind = Kind::indicator;
  int category = 0;   // indicator only
  double weight = 0;
  double center = 0;  // linear only: (x - center) / scale
  double scale = 1;
  friend bool operator==(const SignalTerm&, const SignalTerm&) = default;
};

/// Ground-truth label model: score_k(x) = intercept_k + sum of terms_k, and
/// P(y = k | x) = softmax(score / noise) (argmax when noise = 0).
struct OracleRecord {
  PopulationSpec spec;
  std::uint64_t schema_hash = 0;
  std::vector<double> intercepts;
  std::vector<std::vector<SignalTerm>> terms;
  double noise = 1.0;

  friend bool operator==(const OracleRecord&, const OracleRecord&) = default;
};

std::string serialize_oracle(const OracleRecord& oracle, const SurveySchema& schema);
OracleRecord parse_oracle(std::string_view document, const SurveySchema& schema);

struct Population {
  Table table;
  SurveySchema schema;
  OracleRecord oracle;
};

/// Throws ValidationError on an infeasible spec.
Population synthesize_population(const PopulationSpec& spec);

/// Class scores (rows x classes) of the planted model.
std::vector<std::vector<double>> oracle_scores(const OracleRecord& oracle, const SurveySchema& schema, const Table& table);
/// Posterior P(y = k | x) (rows x classes).
std::vector<std::vector<double>> oracle_posterior(const OracleRecord& oracle, const SurveySchema& schema,
                                                  const Table& table);

/// AUROC of the planted posterior against the table's labels (macro
/// one-vs-rest for more than two classes). Throws SchemaMismatchError when
/// the oracle was planted for another schema.
double oracle_auroc_bound(const OracleRecord& oracle, const SurveySchema& schema, const Table& table);
/// Expected AUROC of the planted posterior when labels are drawn from it:
/// the Bayes-optimal AUROC over the table's feature rows.
double expected_oracle_auroc(const OracleRecord& oracle, const SurveySchema& schema, const Table& table);

}  // namespace skipgan
