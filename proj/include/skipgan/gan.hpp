#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "skipgan/conditioning.hpp"
#include "skipgan/error.hpp"
#include "skipgan/networks.hpp"
#include "skipgan/schema.hpp"
#include "skipgan/table.hpp"
#include "skipgan/transform.hpp"

namespace skipgan {

struct TrainConfig {
  int batch_size = 30;
  int q = 20;
  double omega = 0.5;
  int epochs = 100;
  int pac = 3;
  double gp_lambda = 10.0;
  nn::AdamOptions adam;
  int noise_dim = 128;
  int generator_hidden = 256;
  int critic_hidden = 256;
  double critic_dropout = 0.5;
  /// Gumbel-softmax temperature for generated categorical spans.
  double temperature = 0.2;
  /// Skip-constraint restriction of sampled conditions.
  bool enforce = true;
  /// Weight of the previous importance pmf in each per-iteration update.
  double importance_decay = 0.9;
  int embedding_dim = 32;
  AuxClassifier::Options classifier;
  std::uint64_t seed = 0;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

struct IterationRecord {
  double critic = 0;
  double generator_orig = 0;
  double generator_dstream = 0;
  double classifier = 0;
  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct TrainState {
  int epochs_completed = 0;
  int iterations_per_epoch = 0;
  std::vector<IterationRecord> iterations;
  /// Per epoch: fraction of generator-step fakes whose hardened primary
  /// span equals the condition category.
  std::vector<double> condition_match;
  /// Per epoch: mean number of masks set per sampled non-target condition.
  std::vector<double> mean_assigned;
  std::vector<int> importance_features;
  std::vector<double> importance;
  std::uint64_t parameter_checksum = 0;

  /// Mean of one loss over the iterations of a 1-based epoch.
  double epoch_mean(int epoch, double IterationRecord::*field) const;
  friend bool operator==(const TrainState&, const TrainState&) = default;
};

/// Raised when a loss turns non-finite; carries the state up to the failure.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, TrainState state) : NumericError(what), state_(std::move(state)) {}
  const TrainState& state() const noexcept { return state_; }

 private:
  TrainState state_;
};

/// Everything needed to sample synthetic rows after training.
struct GanModel {
  SurveySchema schema;
  DataTransformer transformer;
  CondLayout cond_layout;
  TrainConfig config;
  TrainState state;
  Generator generator;
  /// Class counts of the target in the training table (declaration order).
  std::vector<int> target_counts;

  std::size_t train_rows() const;
  std::uint64_t generator_checksum();
};

// ---------------------------------------------------------------------------
// Loss pieces. Each returns the loss value and fills the gradient with
// respect to its first matrix argument.

/// mean(fake) - mean(real) over critic scores; gradients are -1/n and 1/n.
double wasserstein_critic_loss(const Mat& real_scores, const Mat& fake_scores, Mat& d_real, Mat& d_fake);

/// Per sample, sum over every mask set in the condition of the cross-entropy
/// between softmax(raw span) and the masked category; mean over samples.
double cond_cross_entropy(const Mat& raw, std::span<const CondVector> conds, const ColumnLayout& layout, Mat& d_raw);

/// Binary (one logit column) or categorical cross-entropy, mean over rows.
double classification_cross_entropy(const Mat& logits, std::span<const int> labels, Mat& d_logits);

/// Encoded rows with the target span removed / gradient scattered back.
Mat drop_target(const Mat& encoded, const Span& target);
Mat restore_target(const Mat& reduced, const Span& target);
/// Feature owning each column of drop_target's output.
std::vector<int> reduced_column_features(const ColumnLayout& layout, int target);

Mat dense_conds(std::span<const CondVector> conds, const CondLayout& layout);

// ---------------------------------------------------------------------------

struct EpochReport {
  int epoch = 0;
  const TrainState* state = nullptr;
};

/// Adversarial training with auxiliary classifier and importance-weighted
/// condition sampling. Deterministic for a fixed config.seed.
GanModel train(const SurveySchema& schema, const Table& train_table, const TrainConfig& config,
               const std::function<void(const EpochReport&)>& on_epoch = {});

/// Activated generator output for the given conditions (inference mode).
/// `rng` drives noise and Gumbel sampling.
Mat sample_generator(GanModel& model, std::span<const CondVector> conds, Rng& rng);

}  // namespace skipgan
