#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "skipgan/schema.hpp"
#include "skipgan/table.hpp"

namespace skipgan {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Span {
  int offset = 0;
  int width = 0;
  int end() const noexcept { return offset + width; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Per-feature spans of the encoded vector, in schema order. A categorical
/// span is its one-hot; a continuous span is [scalar, mode one-hot...].
struct ColumnLayout {
  std::vector<Span> spans;
  int total_width = 0;
  friend bool operator==(const ColumnLayout&, const ColumnLayout&) = default;
};

struct GaussianMode {
  double mean = 0;
  double stddev = 1;
  double weight = 1;
  friend bool operator==(const GaussianMode&, const GaussianMode&) = default;
};

/// Retained mixture modes per feature; empty for categorical features.
struct ContinuousNormalizer {
  std::vector<std::vector<GaussianMode>> modes;
  friend bool operator==(const ContinuousNormalizer&, const ContinuousNormalizer&) = default;
};

struct MixtureOptions {
  int max_modes = 10;
  double weight_threshold = 0.005;
  double concentration = 1e-3;
  int max_iterations = 200;
};

/// Variational Gaussian mixture with a stick-breaking weight prior, fitted
/// to one column. Returns modes with weight above the threshold, weights
/// renormalized. A constant column yields a single mode.
std::vector<GaussianMode> fit_mixture(std::span<const double> values, const MixtureOptions& options = {});

/// Rows in the encoded space.
struct EncodedTable {
  RowMatrixXd data;
  ColumnLayout layout;
  std::size_t rows() const noexcept { return static_cast<std::size_t>(data.rows()); }
};

class DataTransformer {
 public:
  DataTransformer() = default;
  DataTransformer(const SurveySchema& schema, ContinuousNormalizer normalizer);

  static DataTransformer fit(const SurveySchema& schema, const Table& table, const MixtureOptions& options = {});

  const ColumnLayout& layout() const noexcept { return layout_; }
  const ContinuousNormalizer& normalizer() const noexcept { return normalizer_; }
  const SurveySchema& schema() const noexcept { return schema_; }

  EncodedTable encode(const Table& table) const;
  /// Argmax-hardens every one-hot span; continuous scalars are clipped to
  /// [-1, 1] before inversion.
  Table decode(const EncodedTable& encoded) const;
  Table decode(const RowMatrixXd& data) const;

  /// Encoded scalar and mode index for one continuous value.
  std::pair<double, int> encode_value(int feature, double x) const;
  double decode_value(int feature, double scalar, int mode) const;

 private:
  SurveySchema schema_;
  ContinuousNormalizer normalizer_;
  ColumnLayout layout_;
};

ColumnLayout make_layout(const SurveySchema& schema, const ContinuousNormalizer& normalizer);

}  // namespace skipgan
