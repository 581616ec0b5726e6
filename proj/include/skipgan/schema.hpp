#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace skipgan {

enum class FeatureKind { continuous, categorical };

/// Reserved label of the skipped state of an omissible feature.
inline constexpr std::string_view kBlankLabel = "[BLANK]";

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::categorical;
  /// Ordered labels; for omissible features the last one is kBlankLabel.
  std::vector<std::string> categories;
  bool omissible = false;

  bool is_categorical() const noexcept { return kind == FeatureKind::categorical; }
  int cardinality() const noexcept { return static_cast<int>(categories.size()); }
  int blank_index() const noexcept { return omissible ? cardinality() - 1 : -1; }
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct ChainEntry {
  int feature = 0;
  int category = 0;
  friend bool operator==(const ChainEntry&, const ChainEntry&) = default;
};

/// (imposer == trigger) implies every chain feature takes its forced category.
struct SkipConstraint {
  int imposer = 0;
  int trigger = 0;
  std::vector<ChainEntry> chain;
  friend bool operator==(const SkipConstraint&, const SkipConstraint&) = default;
};

/// Chain positions of one triggered constraint that disagree with the forced
/// categories. Positions index into `SkipConstraint::chain`.
struct Violation {
  int constraint = 0;
  std::vector<int> positions;
  friend bool operator==(const Violation&, const Violation&) = default;
};

class SchemaBuilder;

/// Feature definitions, skip constraints and the target variable. Immutable
/// once built; every instance satisfies the schema invariants.
class SurveySchema {
 public:
  SurveySchema() = default;

  const std::vector<FeatureSpec>& features() const noexcept { return features_; }
  const FeatureSpec& feature(int i) const { return features_.at(static_cast<std::size_t>(i)); }
  int num_features() const noexcept { return static_cast<int>(features_.size()); }
  const std::vector<SkipConstraint>& constraints() const noexcept { return constraints_; }
  int target_index() const noexcept { return target_; }
  const FeatureSpec& target() const { return feature(target_); }

  /// Indices of categorical features in declaration order (y included).
  const std::vector<int>& categorical_features() const noexcept { return categorical_; }
  const std::vector<int>& continuous_features() const noexcept { return continuous_; }

  std::optional<int> find_feature(std::string_view name) const;
  int feature_index(std::string_view name) const;
  std::optional<int> find_category(int feature, std::string_view label) const;

  /// Constraints with the given trigger, in declaration order. At most one
  /// exists because duplicate triggers are rejected.
  std::vector<const SkipConstraint*> constraints_triggered_by(int feature, int category) const;
  /// Declaration indices of the constraints with the given trigger.
  std::span<const int> triggered_indices(int feature, int category) const;

  /// Every (feature, category) assignment implied by (feature, category),
  /// including itself, after cascading to fixpoint. Breadth-first order.
  std::vector<ChainEntry> closure(int feature, int category) const;

  /// FNV-1a of the canonical serialized document.
  std::uint64_t hash() const noexcept { return hash_; }

  friend bool operator==(const SurveySchema& a, const SurveySchema& b) {
    return a.features_ == b.features_ && a.constraints_ == b.constraints_ && a.target_ == b.target_;
  }

 private:
  friend class SchemaBuilder;
  SurveySchema(std::vector<FeatureSpec> features, std::vector<SkipConstraint> constraints, int target);
  void validate() const;

  std::vector<FeatureSpec> features_;
  std::vector<SkipConstraint> constraints_;
  int target_ = -1;
  std::vector<int> categorical_;
  std::vector<int> continuous_;
  // trigger_index_[feature][category] -> constraint indices
  std::vector<std::vector<std::vector<int>>> trigger_index_;
  std::uint64_t hash_ = 0;
};

/// Name-based construction. BLANK categories are appended to every feature
/// that appears in some chain; chain entries may refer to them as kBlankLabel.
class SchemaBuilder {
 public:
  SchemaBuilder& categorical(std::string name, std::vector<std::string> labels);
  SchemaBuilder& continuous(std::string name);
  SchemaBuilder& constraint(std::string imposer, std::string trigger,
                            std::vector<std::pair<std::string, std::string>> chain);
  SchemaBuilder& target(std::string name);

  /// Throws ValidationError naming the violated invariant.
  SurveySchema build() const;

 private:
  struct PendingConstraint {
    std::string imposer, trigger;
    std::vector<std::pair<std::string, std::string>> chain;
  };
  std::vector<FeatureSpec> features_;
  std::vector<PendingConstraint> constraints_;
  std::string target_;
};

/// Parses the JSON schema document (`schema_version: 1`). Throws ParseError
/// with a line:column or field-path location, or ValidationError.
SurveySchema parse_schema(std::string_view document);
SurveySchema load_schema(const std::string& path);

/// Canonical document; parse_schema(serialize_schema(s)) == s.
std::string serialize_schema(const SurveySchema& schema);
void save_schema(const SurveySchema& schema, const std::string& path);

/// For each constraint whose trigger fires on `row`, the chain positions that
/// differ from the forced category. Categorical cells hold category indices.
std::vector<Violation> validate_row(const SurveySchema& schema, std::span<const double> row);

}  // namespace skipgan
