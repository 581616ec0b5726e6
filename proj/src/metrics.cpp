#include "skipgan/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "skipgan/error.hpp"

namespace skipgan {

namespace {

std::vector<std::size_t> order_by(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

}  // namespace

std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("auroc: score and label counts differ");
  const auto idx = order_by(scores);
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[idx[t]] == 1) {
        rank_sum += midrank;
        ++pos;
      } else {
        ++neg;
      }
    }
    i = j;
  }
  if (pos == 0 || neg == 0) return std::nullopt;
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

std::optional<double> auroc_macro(const std::vector<std::vector<double>>& probs, std::span<const int> labels) {
  if (probs.size() != labels.size()) throw ValidationError("auroc: probability and label counts differ");
  if (probs.empty()) return std::nullopt;
  const std::size_t k = probs.front().size();
  if (k == 2) {
    std::vector<double> s(probs.size());
    for (std::size_t r = 0; r < probs.size(); ++r) s[r] = probs[r][1];
    return auroc(s, labels);
  }
  double sum = 0;
  int present = 0;
  std::vector<double> s(probs.size());
  std::vector<int> bin(probs.size());
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t r = 0; r < probs.size(); ++r) {
      s[r] = probs[r][c];
      bin[r] = labels[r] == static_cast<int>(c) ? 1 : 0;
    }
    if (std::find(bin.begin(), bin.end(), 1) == bin.end()) continue;
    ++present;
    if (auto a = auroc(s, bin)) sum += *a;
    else return std::nullopt;  // a single class present
  }
  if (present < 2) return std::nullopt;
  return sum / present;
}

double expected_auroc(std::span<const double> scores, std::span<const double> positive_prob) {
  if (scores.size() != positive_prob.size()) throw ValidationError("expected_auroc: size mismatch");
  const auto idx = order_by(scores);
  double below_neg = 0;  // sum of (1 - p) over strictly lower scores
  double num = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double group_p = 0, group_q = 0, group_pq = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      const double p = positive_prob[idx[j]];
      group_p += p;
      group_q += 1 - p;
      group_pq += p * (1 - p);
      ++j;
    }
    num += group_p * below_neg + 0.5 * (group_p * group_q - group_pq);
    below_neg += group_q;
    i = j;
  }
  double sp = 0, sq = 0, spq = 0;
  for (double p : positive_prob) {
    sp += p;
    sq += 1 - p;
    spq += p * (1 - p);
  }
  const double den = sp * sq - spq;
  return den > 0 ? num / den : 0.5;
}

double row_conflict(const SurveySchema& schema, std::span<const double> row) {
  double sum = 0;
  int applicable = 0;
  for (const auto& k : schema.constraints()) {
    if (static_cast<int>(row[static_cast<std::size_t>(k.imposer)]) != k.trigger) continue;
    int width = 0, mismatched = 0;
    for (const auto& e : k.chain) {
      width += schema.feature(e.feature).cardinality();
      if (static_cast<int>(row[static_cast<std::size_t>(e.feature)]) != e.category) ++mismatched;
    }
    sum += 2.0 * mismatched / width;
    ++applicable;
  }
  return applicable ? sum / applicable : 0.0;
}

double conflict(const SurveySchema& schema, const Table& table) {
  if (table.rows() == 0 || schema.constraints().empty()) return 0.0;
  double sum = 0;
  for (std::size_t r = 0; r < table.rows(); ++r) sum += row_conflict(schema, table.row(r));
  return sum / static_cast<double>(table.rows());
}

double conflict(const SurveySchema& schema, const ColumnLayout& layout, const RowMatrixXd& encoded) {
  if (encoded.rows() == 0 || schema.constraints().empty()) return 0.0;
  if (layout.spans.size() != static_cast<std::size_t>(schema.num_features()) || encoded.cols() != layout.total_width) {
    throw ValidationError("conflict: encoded width does not match layout");
  }
  std::vector<double> row(static_cast<std::size_t>(schema.num_features()), 0.0);
  double sum = 0;
  for (Eigen::Index r = 0; r < encoded.rows(); ++r) {
    for (int f : schema.categorical_features()) {
      const Span& s = layout.spans[static_cast<std::size_t>(f)];
      Eigen::Index k = 0;
      encoded.row(r).segment(s.offset, s.width).maxCoeff(&k);
      row[static_cast<std::size_t>(f)] = static_cast<double>(k);
    }
    sum += row_conflict(schema, row);
  }
  return sum / static_cast<double>(encoded.rows());
}

}  // namespace skipgan
