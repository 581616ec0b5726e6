#include "skipgan/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "skipgan/error.hpp"

namespace skipgan {

CondLayout make_cond_layout(const SurveySchema& schema) {
  CondLayout layout;
  layout.offsets.assign(static_cast<std::size_t>(schema.num_features()), -1);
  for (int f : schema.categorical_features()) {
    layout.offsets[static_cast<std::size_t>(f)] = layout.width;
    layout.width += schema.feature(f).cardinality();
  }
  return layout;
}

CondVector make_cond(const SurveySchema& schema, int feature, int category) {
  if (feature < 0 || feature >= schema.num_features() || !schema.feature(feature).is_categorical()) {
    throw ValidationError("condition feature index " + std::to_string(feature) + " is not a categorical feature");
  }
  if (category < 0 || category >= schema.feature(feature).cardinality()) {
    throw ValidationError("condition category index " + std::to_string(category) + " out of range for '" +
                          schema.feature(feature).name + "'");
  }
  return CondVector{feature, category, {{feature, category}}, false};
}

CondVector restrict(const CondVector& cond, const SurveySchema& schema) {
  CondVector out = cond;
  for (std::size_t head = 0; head < out.assigned.size(); ++head) {
    const ChainEntry cur = out.assigned[head];
    for (int c : schema.triggered_indices(cur.feature, cur.category)) {
      for (const auto& e : schema.constraints()[static_cast<std::size_t>(c)].chain) {
        if (std::find(out.assigned.begin(), out.assigned.end(), e) == out.assigned.end()) out.assigned.push_back(e);
      }
    }
  }
  out.restricted = true;
  return out;
}

// ---------------------------------------------------------------------------

CategoryFrequencyTable::CategoryFrequencyTable(const SurveySchema& schema, const Table& train) {
  counts_.resize(static_cast<std::size_t>(schema.num_features()));
  weights_.resize(static_cast<std::size_t>(schema.num_features()));
  for (int f : schema.categorical_features()) {
    auto& cnt = counts_[static_cast<std::size_t>(f)];
    cnt.assign(static_cast<std::size_t>(schema.feature(f).cardinality()), 0);
    for (std::size_t r = 0; r < train.rows(); ++r) ++cnt[static_cast<std::size_t>(train.category(r, static_cast<std::size_t>(f)))];
    auto& w = weights_[static_cast<std::size_t>(f)];
    w.resize(cnt.size());
    double total = 0;
    for (std::size_t k = 0; k < cnt.size(); ++k) total += (w[k] = std::log1p(static_cast<double>(cnt[k])));
    if (total > 0) {
      for (auto& v : w) v /= total;
    }
  }
}

int CategoryFrequencyTable::sample_category(int feature, Rng& rng) const {
  const auto& w = weights(feature);
  std::discrete_distribution<int> dist(w.begin(), w.end());
  return dist(rng);
}

// ---------------------------------------------------------------------------

ImportanceDistribution::ImportanceDistribution(const SurveySchema& schema) {
  for (int f : schema.categorical_features()) {
    if (f != schema.target_index()) features_.push_back(f);
  }
  probs_.assign(features_.size(), features_.empty() ? 0.0 : 1.0 / static_cast<double>(features_.size()));
}

double ImportanceDistribution::probability_of(int feature) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i] == feature) return probs_[i];
  }
  return 0.0;
}

int ImportanceDistribution::sample_feature(Rng& rng) const {
  std::discrete_distribution<std::size_t> dist(probs_.begin(), probs_.end());
  return features_[dist(rng)];
}

ImportanceDistribution ImportanceDistribution::updated(std::span<const double> scores, double decay) const {
  if (scores.size() != features_.size()) throw ValidationError("importance score count does not match feature count");
  double total = 0;
  for (double s : scores) total += std::max(0.0, s);
  ImportanceDistribution out = *this;
  ++out.updates_;
  const double uniform = 1.0 / static_cast<double>(features_.size());
  if (!(total > 0) || !std::isfinite(total)) {
    std::cerr << "skipgan: warning: degenerate importance scores, falling back to uniform\n";
  }
  double norm = 0;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const double fresh = (total > 0 && std::isfinite(total)) ? std::max(0.0, scores[i]) / total : uniform;
    out.probs_[i] = decay * probs_[i] + (1.0 - decay) * fresh;
    norm += out.probs_[i];
  }
  for (auto& p : out.probs_) p /= norm;
  return out;
}

std::vector<double> aggregate_importance(const ImportanceDistribution& imp, std::span<const double> column_scores,
                                         std::span<const int> column_feature) {
  if (column_scores.size() != column_feature.size()) throw ValidationError("score/column map size mismatch");
  const auto& feats = imp.features();
  std::vector<double> sum(feats.size(), 0.0), cnt(feats.size(), 0.0);
  // features() is sorted ascending, so binary search maps feature -> slot.
  for (std::size_t c = 0; c < column_scores.size(); ++c) {
    auto it = std::lower_bound(feats.begin(), feats.end(), column_feature[c]);
    if (it == feats.end() || *it != column_feature[c]) continue;
    auto i = static_cast<std::size_t>(it - feats.begin());
    sum[i] += column_scores[c];
    cnt[i] += 1;
  }
  for (std::size_t i = 0; i < feats.size(); ++i) sum[i] = cnt[i] > 0 ? sum[i] / cnt[i] : 0.0;
  return sum;
}

ImportanceDistribution update_importance(const ImportanceDistribution& imp, std::span<const double> column_scores,
                                         std::span<const int> column_feature, double decay) {
  return imp.updated(aggregate_importance(imp, column_scores, column_feature), decay);
}

// ---------------------------------------------------------------------------

int target_quota(int n, double omega) {
  if (omega < 0 || omega > 1) throw ValidationError("omega must lie in [0, 1]");
  return static_cast<int>(std::floor(omega * n + 0.5));
}

std::vector<CondVector> sample_cond_batch(const SurveySchema& schema, const CategoryFrequencyTable& freq,
                                          const ImportanceDistribution& imp, int n, double omega, Rng& rng,
                                          bool enforce) {
  if (n < 1) throw ValidationError("condition batch size must be positive");
  const int quota = target_quota(n, omega);
  std::vector<CondVector> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n - quota; ++j) {
    const int f = imp.sample_feature(rng);
    CondVector c = make_cond(schema, f, freq.sample_category(f, rng));
    out.push_back(enforce ? restrict(c, schema) : std::move(c));
  }
  const int y = schema.target_index();
  for (int j = 0; j < quota; ++j) out.push_back(make_cond(schema, y, freq.sample_category(y, rng)));
  return out;
}

// ---------------------------------------------------------------------------

ConditionIndex::ConditionIndex(const SurveySchema& schema, const EncodedTable& train) {
  rows_.resize(static_cast<std::size_t>(schema.num_features()));
  for (int f : schema.categorical_features()) {
    const Span& s = train.layout.spans[static_cast<std::size_t>(f)];
    auto& per_cat = rows_[static_cast<std::size_t>(f)];
    per_cat.resize(static_cast<std::size_t>(s.width));
    for (Eigen::Index r = 0; r < train.data.rows(); ++r) {
      Eigen::Index k = 0;
      train.data.row(r).segment(s.offset, s.width).maxCoeff(&k);
      per_cat[static_cast<std::size_t>(k)].push_back(static_cast<std::size_t>(r));
    }
  }
}

ConditionIndex::ConditionIndex(const SurveySchema& schema, const Table& train) {
  rows_.resize(static_cast<std::size_t>(schema.num_features()));
  for (int f : schema.categorical_features()) {
    auto& per_cat = rows_[static_cast<std::size_t>(f)];
    per_cat.resize(static_cast<std::size_t>(schema.feature(f).cardinality()));
    for (std::size_t r = 0; r < train.rows(); ++r) {
      per_cat[static_cast<std::size_t>(train.category(r, static_cast<std::size_t>(f)))].push_back(r);
    }
  }
}

std::vector<std::size_t> match_rows(const ConditionIndex& index, std::span<const CondVector> conds, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(conds.size());
  for (const auto& c : conds) {
    const auto& candidates = index.rows(c.feature, c.category);
    if (candidates.empty()) {
      throw NumericError("no training row matches condition (feature " + std::to_string(c.feature) + ", category " +
                         std::to_string(c.category) + ")");
    }
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    out.push_back(candidates[pick(rng)]);
  }
  return out;
}

}  // namespace skipgan
