#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "skipgan/random.hpp"
#include "skipgan/schema.hpp"
#include "skipgan/table.hpp"
#include "skipgan/transform.hpp"

namespace skipgan {

/// Offsets of each categorical feature's mask inside the cond vector.
/// Continuous features have offset -1.
struct CondLayout {
  std::vector<int> offsets;
  int width = 0;
  int slot(int feature, int category) const { return offsets[static_cast<std::size_t>(feature)] + category; }
};

CondLayout make_cond_layout(const SurveySchema& schema);

/// Concatenated per-feature masks. `assigned` lists every (feature,
/// category) whose mask entry is 1; the first entry is the primary
/// condition (i*, k*).
struct CondVector {
  int feature = 0;
  int category = 0;
  std::vector<ChainEntry> assigned;
  bool restricted = false;

  bool targets(int f) const noexcept { return feature == f; }
  /// Writes the dense mask into `out` (length layout.width, zero-filled here).
  template <typename T>
  void write(const CondLayout& layout, std::span<T> out) const {
    std::fill(out.begin(), out.end(), T(0));
    for (const auto& e : assigned) out[static_cast<std::size_t>(layout.slot(e.feature, e.category))] = T(1);
  }
  std::vector<double> dense(const CondLayout& layout) const {
    std::vector<double> v(static_cast<std::size_t>(layout.width));
    write<double>(layout, v);
    return v;
  }
};

/// Unrestricted single-condition vector. Throws ValidationError on a bad
/// feature or category index.
CondVector make_cond(const SurveySchema& schema, int feature, int category);

/// Applies every constraint triggered by the assigned entries, cascading to
/// fixpoint. Idempotent; never drops the primary condition.
CondVector restrict(const CondVector& cond, const SurveySchema& schema);

/// Category counts in the training table and the log-frequency sampling pmf
/// derived from them (log(1 + count), normalized).
class CategoryFrequencyTable {
 public:
  CategoryFrequencyTable() = default;
  CategoryFrequencyTable(const SurveySchema& schema, const Table& train);

  int count(int feature, int category) const {
    return counts_[static_cast<std::size_t>(feature)][static_cast<std::size_t>(category)];
  }
  const std::vector<double>& weights(int feature) const { return weights_[static_cast<std::size_t>(feature)]; }
  int sample_category(int feature, Rng& rng) const;

 private:
  std::vector<std::vector<int>> counts_;
  std::vector<std::vector<double>> weights_;
};

/// Sampling pmf over the categorical features other than the target.
class ImportanceDistribution {
 public:
  ImportanceDistribution() = default;
  explicit ImportanceDistribution(const SurveySchema& schema);

  const std::vector<int>& features() const noexcept { return features_; }
  const std::vector<double>& probabilities() const noexcept { return probs_; }
  double probability_of(int feature) const;
  std::size_t updates() const noexcept { return updates_; }
  int sample_feature(Rng& rng) const;

  /// New pmf: decay * old + (1 - decay) * normalized(scores). `scores` is one
  /// nonnegative value per entry of features(). All-zero scores fall back to
  /// uniform.
  ImportanceDistribution updated(std::span<const double> scores, double decay) const;

 private:
  std::vector<int> features_;
  std::vector<double> probs_;
  std::size_t updates_ = 0;
};

/// Mean importance per categorical non-target feature from per-column
/// scores. `column_feature[c]` names the feature owning column c.
std::vector<double> aggregate_importance(const ImportanceDistribution& imp, std::span<const double> column_scores,
                                         std::span<const int> column_feature);

ImportanceDistribution update_importance(const ImportanceDistribution& imp, std::span<const double> column_scores,
                                         std::span<const int> column_feature, double decay);

/// Number of target conditions in a batch of n: round-half-up of omega * n.
int target_quota(int n, double omega);

/// n conditions: the first n - quota drawn as feature ~ importance,
/// category ~ log-frequency and (when `enforce`) restricted; the remaining
/// quota condition on the target with category ~ log-frequency.
std::vector<CondVector> sample_cond_batch(const SurveySchema& schema, const CategoryFrequencyTable& freq,
                                          const ImportanceDistribution& imp, int n, double omega, Rng& rng,
                                          bool enforce = true);

/// Training-row lookup by (feature, category).
class ConditionIndex {
 public:
  ConditionIndex() = default;
  ConditionIndex(const SurveySchema& schema, const EncodedTable& train);
  ConditionIndex(const SurveySchema& schema, const Table& train);

  const std::vector<std::size_t>& rows(int feature, int category) const {
    return rows_[static_cast<std::size_t>(feature)][static_cast<std::size_t>(category)];
  }

 private:
  std::vector<std::vector<std::vector<std::size_t>>> rows_;
};

/// One uniformly drawn training row per condition, matching only the
/// primary (i*, k*). Throws NumericError when no row matches.
std::vector<std::size_t> match_rows(const ConditionIndex& index, std::span<const CondVector> conds, Rng& rng);

}  // namespace skipgan
