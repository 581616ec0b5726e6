#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "skipgan/schema.hpp"
#include "skipgan/table.hpp"

namespace skipgan {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Classifier inputs: one-hot categorical features and standardized
/// continuous features, target excluded. Standardization is fitted on the
/// table the classifier trains on.
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  FeatureEncoder(const SurveySchema& schema, const Table& fit_table);
  FeatureMatrix transform(const Table& table) const;
  int width() const noexcept { return width_; }

 private:
  SurveySchema schema_;
  std::vector<int> offsets_;
  std::vector<double> mean_, scale_;
  int width_ = 0;
};

enum class ClassifierKind { elastic_net, decision_tree, random_forest, gradient_boosting, mlp, feature_selecting };

std::string to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view s);

/// Fixed hyperparameters; each kind reads only its own fields.
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::elastic_net;
  std::string name;
  // elastic_net
  double lambda = 0.02;
  double l1_ratio = 0.5;
  int iterations = 300;
  // trees
  int trees = 100;
  int max_depth = 6;
  int min_samples_leaf = 1;
  double feature_fraction = 0.0;  // 0: sqrt(width) per split
  double learning_rate = 0.1;
  double subsample = 1.0;
  double l2 = 1.0;
  // networks
  std::vector<int> hidden;
  int epochs = 100;
  int batch_size = 32;
  double step_size = 1e-3;
  double weight_decay = 1e-4;
};

/// The default comparison zoo: elastic-net logistic regression, CART,
/// random forest, two boosted-tree presets, MLP (100, 100, 10), and the
/// feature-selecting network.
std::vector<ClassifierSpec> default_zoo();

/// Binary probabilistic classifier.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const FeatureMatrix& x, std::span<const int> y, std::uint64_t seed) = 0;
  /// P(y = 1 | x) per row.
  virtual std::vector<double> predict(const FeatureMatrix& x) const = 0;
};

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec);

/// Trains on `train` and scores `test`: rows x classes. A binary target
/// uses one classifier (columns 1 - p, p); more classes use one-vs-all
/// classifiers, column k holding classifier k's score.
std::vector<std::vector<double>> fit_predict(const ClassifierSpec& spec, const SurveySchema& schema, const Table& train,
                                             const Table& test, std::uint64_t seed);

}  // namespace skipgan
