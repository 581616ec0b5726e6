#pragma once

#include <optional>
#include <span>
#include <vector>

#include "skipgan/schema.hpp"
#include "skipgan/table.hpp"
#include "skipgan/transform.hpp"

namespace skipgan {

/// Rank-based AUROC with midranks for ties; labels are 0/1. Empty when only
/// one class is present.
std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels);

/// Unweighted mean of one-vs-rest AUROCs over the classes present in
/// `labels`. `probs` is rows x classes. With two classes this equals the
/// binary AUROC of column 1. Empty when fewer than two classes are present.
std::optional<double> auroc_macro(const std::vector<std::vector<double>>& probs, std::span<const int> labels);

/// AUROC when row i is positive with probability positive_prob[i]:
/// sum over ordered pairs i != j of p_i (1 - p_j) [s_i > s_j] (ties 1/2),
/// normalized by the total pair weight.
double expected_auroc(std::span<const double> scores, std::span<const double> positive_prob);

/// Mean over triggered constraints of 2 * (mismatched chain features) /
/// (summed chain cardinalities); 0 when no constraint is triggered.
double row_conflict(const SurveySchema& schema, std::span<const double> row);
/// Mean row conflict; 0 for an empty table or a schema without constraints.
double conflict(const SurveySchema& schema, const Table& table);
/// Conflict of encoded rows after argmax hardening of categorical spans.
double conflict(const SurveySchema& schema, const ColumnLayout& layout, const RowMatrixXd& encoded);

}  // namespace skipgan
