#include "skipgan/schema.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "skipgan/error.hpp"
#include "skipgan/hash.hpp"

namespace skipgan {

namespace {

using nlohmann::json;

std::string line_col(std::string_view doc, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, doc.size()); ++i) {
    if (doc[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "/" + key, "missing field");
  return *it;
}

std::string require_string(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) throw ParseError(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

const json& require_array(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_array()) throw ParseError(path + "/" + key, "expected an array");
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// SurveySchema

SurveySchema::SurveySchema(std::vector<FeatureSpec> features, std::vector<SkipConstraint> constraints, int target)
    : features_(std::move(features)), constraints_(std::move(constraints)), target_(target) {
  for (int i = 0; i < num_features(); ++i) {
    (features_[static_cast<std::size_t>(i)].is_categorical() ? categorical_ : continuous_).push_back(i);
  }
  validate();
  trigger_index_.resize(features_.size());
  for (std::size_t f = 0; f < features_.size(); ++f) trigger_index_[f].resize(features_[f].categories.size());
  for (std::size_t c = 0; c < constraints_.size(); ++c) {
    const auto& k = constraints_[c];
    trigger_index_[static_cast<std::size_t>(k.imposer)][static_cast<std::size_t>(k.trigger)].push_back(static_cast<int>(c));
  }
  // Cascades must never force one feature to two different categories.
  for (int f : categorical_) {
    for (int k = 0; k < feature(f).cardinality(); ++k) {
      std::unordered_map<int, int> assigned;
      for (const auto& e : closure(f, k)) {
        auto [it, fresh] = assigned.emplace(e.feature, e.category);
        if (!fresh && it->second != e.category) {
          throw ValidationError("inconsistent cascade: assignment " + feature(f).name + "=" +
                                feature(f).categories[static_cast<std::size_t>(k)] + " forces feature '" +
                                feature(e.feature).name + "' to two different categories");
        }
      }
    }
  }
  hash_ = fnv1a(serialize_schema(*this));
}

void SurveySchema::validate() const {
  if (features_.empty()) throw ValidationError("schema declares no features");
  std::set<std::string> names;
  for (const auto& f : features_) {
    if (f.name.empty()) throw ValidationError("feature with empty name");
    if (!names.insert(f.name).second) throw ValidationError("duplicate feature name '" + f.name + "'");
    if (f.is_categorical()) {
      if (f.cardinality() < 2) throw ValidationError("categorical feature '" + f.name + "' needs at least 2 categories");
      std::set<std::string> labels;
      for (std::size_t k = 0; k < f.categories.size(); ++k) {
        const auto& l = f.categories[k];
        if (!labels.insert(l).second) throw ValidationError("duplicate category '" + l + "' in feature '" + f.name + "'");
        const bool is_last = k + 1 == f.categories.size();
        if (l == kBlankLabel && !(f.omissible && is_last)) {
          throw ValidationError("feature '" + f.name + "' uses the reserved label " + std::string(kBlankLabel));
        }
      }
      if (f.omissible && f.categories.back() != kBlankLabel) {
        throw ValidationError("omissible feature '" + f.name + "' must end with the BLANK category");
      }
    } else {
      if (!f.categories.empty()) throw ValidationError("continuous feature '" + f.name + "' declares categories");
      if (f.omissible) throw ValidationError("continuous feature '" + f.name + "' cannot be omissible");
    }
  }

  const int n = num_features();
  auto valid_categorical = [&](int i, const char* role) {
    if (i < 0 || i >= n) throw ValidationError(std::string("dangling ") + role + " index " + std::to_string(i));
    if (!feature(i).is_categorical()) {
      throw ValidationError(std::string(role) + " '" + feature(i).name + "' is not categorical");
    }
  };
  auto valid_category = [&](int i, int k) {
    if (k < 0 || k >= feature(i).cardinality()) {
      throw ValidationError("dangling category index " + std::to_string(k) + " for feature '" + feature(i).name + "'");
    }
  };

  valid_categorical(target_, "target");

  std::set<std::pair<int, int>> triggers;
  std::vector<std::vector<int>> edges(static_cast<std::size_t>(n));
  for (const auto& c : constraints_) {
    valid_categorical(c.imposer, "imposer");
    valid_category(c.imposer, c.trigger);
    if (c.imposer == target_) throw ValidationError("target '" + feature(target_).name + "' cannot impose a constraint");
    if (!triggers.emplace(c.imposer, c.trigger).second) {
      throw ValidationError("duplicate trigger " + feature(c.imposer).name + "=" +
                            feature(c.imposer).categories[static_cast<std::size_t>(c.trigger)]);
    }
    if (c.chain.empty()) throw ValidationError("constraint imposed by '" + feature(c.imposer).name + "' has an empty chain");
    std::set<int> members;
    for (const auto& e : c.chain) {
      valid_categorical(e.feature, "chain feature");
      valid_category(e.feature, e.category);
      if (e.feature == c.imposer) throw ValidationError("imposer '" + feature(c.imposer).name + "' appears in its own chain");
      if (e.feature == target_) throw ValidationError("target '" + feature(target_).name + "' appears in a chain");
      if (!members.insert(e.feature).second) {
        throw ValidationError("feature '" + feature(e.feature).name + "' repeated within one chain");
      }
      if (!feature(e.feature).omissible) {
        throw ValidationError("chain feature '" + feature(e.feature).name + "' is not marked omissible");
      }
      edges[static_cast<std::size_t>(c.imposer)].push_back(e.feature);
    }
  }

  // Iterative DFS over the implication graph; 0 = unseen, 1 = on stack, 2 = done.
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  for (int root = 0; root < n; ++root) {
    if (state[static_cast<std::size_t>(root)] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    state[static_cast<std::size_t>(root)] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& out = edges[static_cast<std::size_t>(node)];
      if (next < out.size()) {
        int child = out[next++];
        auto& s = state[static_cast<std::size_t>(child)];
        if (s == 1) {
          throw ValidationError("cycle in constraint implication graph through '" + feature(child).name + "'");
        }
        if (s == 0) {
          s = 1;
          stack.emplace_back(child, 0);
        }
      } else {
        state[static_cast<std::size_t>(node)] = 2;
        stack.pop_back();
      }
    }
  }
}

std::optional<int> SurveySchema::find_feature(std::string_view name) const {
  for (int i = 0; i < num_features(); ++i) {
    if (features_[static_cast<std::size_t>(i)].name == name) return i;
  }
  return std::nullopt;
}

int SurveySchema::feature_index(std::string_view name) const {
  if (auto i = find_feature(name)) return *i;
  throw ValidationError("unknown feature '" + std::string(name) + "'");
}

std::optional<int> SurveySchema::find_category(int feature_idx, std::string_view label) const {
  const auto& cats = feature(feature_idx).categories;
  for (std::size_t k = 0; k < cats.size(); ++k) {
    if (cats[k] == label) return static_cast<int>(k);
  }
  return std::nullopt;
}

std::span<const int> SurveySchema::triggered_indices(int feature_idx, int category) const {
  if (feature_idx < 0 || feature_idx >= num_features()) return {};
  const auto& per_cat = trigger_index_[static_cast<std::size_t>(feature_idx)];
  if (category < 0 || static_cast<std::size_t>(category) >= per_cat.size()) return {};
  return per_cat[static_cast<std::size_t>(category)];
}

std::vector<const SkipConstraint*> SurveySchema::constraints_triggered_by(int feature_idx, int category) const {
  std::vector<const SkipConstraint*> out;
  for (int c : triggered_indices(feature_idx, category)) out.push_back(&constraints_[static_cast<std::size_t>(c)]);
  return out;
}

std::vector<ChainEntry> SurveySchema::closure(int feature_idx, int category) const {
  std::vector<ChainEntry> out{{feature_idx, category}};
  for (std::size_t head = 0; head < out.size(); ++head) {
    const ChainEntry cur = out[head];
    for (int c : triggered_indices(cur.feature, cur.category)) {
      for (const auto& e : constraints_[static_cast<std::size_t>(c)].chain) {
        bool seen = std::any_of(out.begin(), out.end(), [&](const ChainEntry& o) { return o == e; });
        if (!seen) out.push_back(e);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SchemaBuilder

SchemaBuilder& SchemaBuilder::categorical(std::string name, std::vector<std::string> labels) {
  features_.push_back({std::move(name), FeatureKind::categorical, std::move(labels), false});
  return *this;
}

SchemaBuilder& SchemaBuilder::continuous(std::string name) {
  features_.push_back({std::move(name), FeatureKind::continuous, {}, false});
  return *this;
}

SchemaBuilder& SchemaBuilder::constraint(std::string imposer, std::string trigger,
                                         std::vector<std::pair<std::string, std::string>> chain) {
  constraints_.push_back({std::move(imposer), std::move(trigger), std::move(chain)});
  return *this;
}

SchemaBuilder& SchemaBuilder::target(std::string name) {
  target_ = std::move(name);
  return *this;
}

SurveySchema SchemaBuilder::build() const {
  std::vector<FeatureSpec> features = features_;
  auto index_of = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (features[i].name == name) return static_cast<int>(i);
    }
    throw ValidationError("dangling reference to unknown feature '" + name + "'");
  };
  for (const auto& c : constraints_) {
    for (const auto& [fname, label] : c.chain) {
      auto& f = features[static_cast<std::size_t>(index_of(fname))];
      if (f.is_categorical() && !f.omissible) {
        f.omissible = true;
        f.categories.emplace_back(kBlankLabel);
      }
    }
  }
  auto category_of = [&](int fi, const std::string& label) -> int {
    const auto& f = features[static_cast<std::size_t>(fi)];
    if (!f.is_categorical()) throw ValidationError("feature '" + f.name + "' is continuous and cannot join a constraint");
    for (std::size_t k = 0; k < f.categories.size(); ++k) {
      if (f.categories[k] == label) return static_cast<int>(k);
    }
    throw ValidationError("dangling reference to unknown category '" + label + "' of feature '" + f.name + "'");
  };
  std::vector<SkipConstraint> constraints;
  for (const auto& c : constraints_) {
    SkipConstraint k;
    k.imposer = index_of(c.imposer);
    k.trigger = category_of(k.imposer, c.trigger);
    for (const auto& [fname, label] : c.chain) {
      int fi = index_of(fname);
      k.chain.push_back({fi, category_of(fi, label)});
    }
    constraints.push_back(std::move(k));
  }
  if (target_.empty()) throw ValidationError("schema declares no target");
  return SurveySchema(std::move(features), std::move(constraints), index_of(target_));
}

// ---------------------------------------------------------------------------
// Document format

SurveySchema parse_schema(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError(line_col(document, e.byte > 0 ? e.byte - 1 : 0), "malformed document");
  }
  if (!doc.is_object()) throw ParseError("1:1", "document must be an object");
  const json& version = require(doc, "schema_version", "");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw ParseError("/schema_version", "unsupported schema_version (expected 1)");
  }

  SchemaBuilder builder;
  const json& features = require_array(doc, "features", "");
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::string path = "/features/" + std::to_string(i);
    const json& f = features[i];
    std::string name = require_string(f, "name", path);
    std::string kind = require_string(f, "kind", path);
    if (kind == "continuous") {
      if (f.contains("categories")) throw ParseError(path + "/categories", "continuous features take no categories");
      builder.continuous(std::move(name));
    } else if (kind == "categorical") {
      const json& cats = require_array(f, "categories", path);
      std::vector<std::string> labels;
      for (std::size_t k = 0; k < cats.size(); ++k) {
        if (!cats[k].is_string()) throw ParseError(path + "/categories/" + std::to_string(k), "expected a string");
        labels.push_back(cats[k].get<std::string>());
      }
      builder.categorical(std::move(name), std::move(labels));
    } else {
      throw ParseError(path + "/kind", "expected 'continuous' or 'categorical'");
    }
  }

  if (auto it = doc.find("constraints"); it != doc.end()) {
    if (!it->is_array()) throw ParseError("/constraints", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "/constraints/" + std::to_string(i);
      const json& c = (*it)[i];
      std::string imposer = require_string(c, "imposer", path);
      std::string trigger = require_string(c, "trigger", path);
      const json& chain = require_array(c, "chain", path);
      std::vector<std::pair<std::string, std::string>> entries;
      for (std::size_t j = 0; j < chain.size(); ++j) {
        const std::string epath = path + "/chain/" + std::to_string(j);
        entries.emplace_back(require_string(chain[j], "feature", epath), require_string(chain[j], "value", epath));
      }
      builder.constraint(std::move(imposer), std::move(trigger), std::move(entries));
    }
  }
  builder.target(require_string(doc, "target", ""));
  return builder.build();
}

SurveySchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open schema file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

std::string serialize_schema(const SurveySchema& schema) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = 1;
  doc["features"] = nlohmann::ordered_json::array();
  for (const auto& f : schema.features()) {
    nlohmann::ordered_json jf;
    jf["name"] = f.name;
    jf["kind"] = f.is_categorical() ? "categorical" : "continuous";
    if (f.is_categorical()) {
      auto cats = f.categories;
      if (f.omissible) cats.pop_back();
      jf["categories"] = cats;
    }
    doc["features"].push_back(std::move(jf));
  }
  doc["constraints"] = nlohmann::ordered_json::array();
  for (const auto& c : schema.constraints()) {
    const auto& imp = schema.feature(c.imposer);
    nlohmann::ordered_json jc;
    jc["imposer"] = imp.name;
    jc["trigger"] = imp.categories[static_cast<std::size_t>(c.trigger)];
    jc["chain"] = nlohmann::ordered_json::array();
    for (const auto& e : c.chain) {
      const auto& f = schema.feature(e.feature);
      jc["chain"].push_back({{"feature", f.name}, {"value", f.categories[static_cast<std::size_t>(e.category)]}});
    }
    doc["constraints"].push_back(std::move(jc));
  }
  doc["target"] = schema.target().name;
  return doc.dump(2) + "\n";
}

void save_schema(const SurveySchema& schema, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write schema file '" + path + "'");
  out << serialize_schema(schema);
}

std::vector<Violation> validate_row(const SurveySchema& schema, std::span<const double> row) {
  std::vector<Violation> out;
  const auto& cs = schema.constraints();
  for (std::size_t c = 0; c < cs.size(); ++c) {
    const auto& k = cs[c];
    if (static_cast<int>(row[static_cast<std::size_t>(k.imposer)]) != k.trigger) continue;
    Violation v{static_cast<int>(c), {}};
    for (std::size_t p = 0; p < k.chain.size(); ++p) {
      if (static_cast<int>(row[static_cast<std::size_t>(k.chain[p].feature)]) != k.chain[p].category) {
        v.positions.push_back(static_cast<int>(p));
      }
    }
    if (!v.positions.empty()) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace skipgan
