#include "skipgan/simcorpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "skipgan/error.hpp"
#include "skipgan/hash.hpp"
#include "skipgan/metrics.hpp"
#include "skipgan/random.hpp"

namespace skipgan {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string to_string(ProblemMode mode) { return mode == ProblemMode::A ? "A" : "B"; }

ProblemMode parse_problem_mode(std::string_view s) {
  if (s == "A" || s == "a") return ProblemMode::A;
  if (s == "B" || s == "b") return ProblemMode::B;
  throw ValidationError("problem mode must be A or B, got '" + std::string(s) + "'");
}

void PopulationSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& what) {
    throw ValidationError("population spec field '" + field + "' " + what);
  };
  auto unit = [&](const std::string& field, double v) {
    if (!(v >= 0 && v <= 1)) fail(field, "must lie in [0, 1]");
  };
  if (rows < 1) fail("rows", "must be positive");
  if (continuous < 0) fail("continuous", "must be nonnegative");
  if (categorical < 1) fail("categorical", "must be positive");
  unit("ordinal_fraction", ordinal_fraction);
  if (ordinal_levels < 2) fail("ordinal_levels", "must be at least 2");
  if (min_cardinality < 2) fail("min_cardinality", "must be at least 2");
  if (max_cardinality < min_cardinality) fail("max_cardinality", "must be >= min_cardinality");
  if (constraints < 0) fail("constraints", "must be nonnegative");
  if (min_chain < 1) fail("min_chain", "must be at least 1");
  if (max_chain < min_chain) fail("max_chain", "must be >= min_chain");
  unit("nest_probability", nest_probability);
  unit("value_force_fraction", value_force_fraction);
  if (!(min_trigger_rate > 0 && min_trigger_rate < 1)) fail("min_trigger_rate", "must lie in (0, 1)");
  if (!(max_trigger_rate >= min_trigger_rate && max_trigger_rate < 0.9)) {
    fail("max_trigger_rate", "must lie in [min_trigger_rate, 0.9)");
  }
  if (latent_factors < 1) fail("latent_factors", "must be positive");
  if (mode == ProblemMode::A && classes != 2) fail("classes", "must be 2 for mode A");
  if (mode == ProblemMode::B && classes < 3) fail("classes", "must be at least 3 for mode B");
  if (!priors.empty()) {
    if (priors.size() != static_cast<std::size_t>(classes)) fail("priors", "must have one entry per class");
    double s = 0;
    for (double p : priors) {
      if (!(p > 0)) fail("priors", "entries must be positive");
      s += p;
    }
    if (std::abs(s - 1) > 1e-9) fail("priors", "must sum to 1");
  }
  if (signal_features < 0) fail("signal_features", "must be nonnegative");
  if (signal_features > categorical + continuous) fail("signal_features", "exceeds the number of features");
  unit("chain_signal_fraction", chain_signal_fraction);
  if (!(effect >= 0)) fail("effect", "must be nonnegative");
  if (!(noise >= 0)) fail("noise", "must be nonnegative");
}

namespace {

ordered_json spec_to_json(const PopulationSpec& s) {
  ordered_json j;
  j["rows"] = s.rows;
  j["continuous"] = s.continuous;
  j["categorical"] = s.categorical;
  j["ordinal_fraction"] = s.ordinal_fraction;
  j["ordinal_levels"] = s.ordinal_levels;
  j["min_cardinality"] = s.min_cardinality;
  j["max_cardinality"] = s.max_cardinality;
  j["constraints"] = s.constraints;
  j["min_chain"] = s.min_chain;
  j["max_chain"] = s.max_chain;
  j["nest_probability"] = s.nest_probability;
  j["value_force_fraction"] = s.value_force_fraction;
  j["min_trigger_rate"] = s.min_trigger_rate;
  j["max_trigger_rate"] = s.max_trigger_rate;
  j["latent_factors"] = s.latent_factors;
  j["mode"] = to_string(s.mode);
  j["classes"] = s.classes;
  j["priors"] = s.priors;
  j["signal_features"] = s.signal_features;
  j["chain_signal_fraction"] = s.chain_signal_fraction;
  j["effect"] = s.effect;
  j["noise"] = s.noise;
  j["structure_seed"] = s.structure_seed;
  j["seed"] = s.seed;
  return j;
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("/") + key, "wrong type for field '" + std::string(key) + "'");
  }
}

PopulationSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("/", "population spec must be a JSON object");
  static const std::set<std::string> known = {
      "rows", "continuous", "categorical", "ordinal_fraction", "ordinal_levels", "min_cardinality",
      "max_cardinality", "constraints", "min_chain", "max_chain", "nest_probability", "value_force_fraction",
      "min_trigger_rate", "max_trigger_rate", "latent_factors", "mode", "classes", "priors", "signal_features",
      "chain_signal_fraction", "effect", "noise", "structure_seed", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ParseError("/" + key, "unknown field '" + key + "'");
  }
  PopulationSpec s;
  std::string mode = to_string(s.mode);
  read_field(j, "mode", mode);
  s.mode = parse_problem_mode(mode);
  if (s.mode == ProblemMode::B) s.classes = 3;
  read_field(j, "rows", s.rows);
  read_field(j, "continuous", s.continuous);
  read_field(j, "categorical", s.categorical);
  read_field(j, "ordinal_fraction", s.ordinal_fraction);
  read_field(j, "ordinal_levels", s.ordinal_levels);
  read_field(j, "min_cardinality", s.min_cardinality);
  read_field(j, "max_cardinality", s.max_cardinality);
  read_field(j, "constraints", s.constraints);
  read_field(j, "min_chain", s.min_chain);
  read_field(j, "max_chain", s.max_chain);
  read_field(j, "nest_probability", s.nest_probability);
  read_field(j, "value_force_fraction", s.value_force_fraction);
  read_field(j, "min_trigger_rate", s.min_trigger_rate);
  read_field(j, "max_trigger_rate", s.max_trigger_rate);
  read_field(j, "latent_factors", s.latent_factors);
  read_field(j, "classes", s.classes);
  read_field(j, "priors", s.priors);
  read_field(j, "signal_features", s.signal_features);
  read_field(j, "chain_signal_fraction", s.chain_signal_fraction);
  read_field(j, "effect", s.effect);
  read_field(j, "noise", s.noise);
  read_field(j, "structure_seed", s.structure_seed);
  read_field(j, "seed", s.seed);
  s.validate();
  return s;
}

}  // namespace

PopulationSpec parse_population_spec(std::string_view document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed population spec");
  }
  return spec_from_json(j);
}

PopulationSpec load_population_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open population spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_population_spec(ss.str());
}

std::string serialize_population_spec(const PopulationSpec& spec) { return spec_to_json(spec).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Generative plan

namespace {

double logit(double p) { return std::log(p / (1 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, std::clamp(p, 1e-12, 1 - 1e-12));
}

enum class Role { free, gate, subgate, chain, forced };

struct FeatureModel {
  enum class Kind { binary, ordinal, nominal, continuous, bimodal };
  Kind kind = Kind::nominal;
  int levels = 2;                         // regular categories (BLANK excluded)
  std::vector<double> loading;            // latent loadings
  double bias = 0;                        // binary: logit of "No"
  std::vector<double> thresholds;         // ordinal
  std::vector<double> nominal_bias;       // nominal
  std::vector<std::vector<double>> nominal_loading;
  double mean = 0, sd = 1;                // continuous
};

struct PlannedConstraint {
  int imposer = 0;
  bool on_blank = false;  // trigger is the imposer's BLANK instead of "No"
  std::vector<int> chain;
  bool force_value = false;  // chain forced to category 0 instead of BLANK
};

struct Plan {
  int n_cat = 0;
  std::vector<Role> role;
  std::vector<FeatureModel> models;  // continuous first, then categorical
  std::vector<PlannedConstraint> constraints;
  SurveySchema schema;
  // Schema indices: continuous j -> j; categorical i -> continuous + i; target last.
  int continuous = 0;
};

std::string cat_name(int i) {
  std::ostringstream s;
  s << 'Q' << std::setw(3) << std::setfill('0') << i + 1;
  return s.str();
}

Plan make_plan(const PopulationSpec& spec) {
  Rng rng(derive_seed(spec.structure_seed, {0x5eed}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Plan plan;
  plan.n_cat = spec.categorical;
  plan.continuous = spec.continuous;
  plan.role.assign(static_cast<std::size_t>(spec.categorical), Role::free);

  std::vector<int> pool(static_cast<std::size_t>(spec.categorical));
  std::iota(pool.begin(), pool.end(), 0);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::size_t next = 0;
  auto take = [&](Role r) {
    if (next >= pool.size()) {
      throw ValidationError("infeasible population spec: the constraint plan needs more than the " +
                            std::to_string(spec.categorical) + " declared categorical features");
    }
    const int f = pool[next++];
    plan.role[static_cast<std::size_t>(f)] = r;
    return f;
  };
  auto chain_len = [&] { return std::uniform_int_distribution<int>(spec.min_chain, spec.max_chain)(rng); };

  int made = 0;
  while (made < spec.constraints) {
    const int remaining = spec.constraints - made;
    if (unif(rng) < spec.value_force_fraction) {
      PlannedConstraint k;
      k.imposer = take(Role::gate);
      k.force_value = true;
      const int len = std::min(chain_len(), 2);
      for (int i = 0; i < len; ++i) k.chain.push_back(take(Role::forced));
      plan.constraints.push_back(k);
      made += 1;
      continue;
    }
    PlannedConstraint top;
    top.imposer = take(Role::gate);
    const int len = chain_len();
    const bool nest = remaining >= 3 && unif(rng) < spec.nest_probability;
    for (int i = 0; i < len; ++i) top.chain.push_back(take(nest && i == 0 ? Role::subgate : Role::chain));
    plan.constraints.push_back(top);
    made += 1;
    if (nest) {
      PlannedConstraint sub;
      sub.imposer = top.chain.front();
      const int sub_len = chain_len();
      for (int i = 0; i < sub_len; ++i) sub.chain.push_back(take(Role::chain));
      PlannedConstraint cascade = sub;
      cascade.on_blank = true;
      plan.constraints.push_back(sub);
      plan.constraints.push_back(cascade);
      made += 2;
    }
  }

  const int latent = spec.latent_factors;
  const double load = 0.8 / std::sqrt(static_cast<double>(latent));
  auto loading = [&] {
    std::vector<double> a(static_cast<std::size_t>(latent));
    for (auto& v : a) v = load * normal(rng);
    return a;
  };

  for (int j = 0; j < spec.continuous; ++j) {
    FeatureModel m;
    m.kind = (j % 2 == 0) ? FeatureModel::Kind::continuous : FeatureModel::Kind::bimodal;
    m.loading = loading();
    m.mean = 40 + 10 * normal(rng);
    m.sd = 5 + 5 * unif(rng);
    plan.models.push_back(m);
  }
  for (int i = 0; i < spec.categorical; ++i) {
    FeatureModel m;
    m.loading = loading();
    const Role r = plan.role[static_cast<std::size_t>(i)];
    if (r == Role::gate || r == Role::subgate) {
      m.kind = FeatureModel::Kind::binary;
      m.levels = 2;
      const double lo = spec.min_trigger_rate + (r == Role::subgate ? 0.1 : 0.0);
      const double hi = std::min(0.85, spec.max_trigger_rate + (r == Role::subgate ? 0.1 : 0.0));
      m.bias = logit(lo + (hi - lo) * unif(rng));
    } else if (unif(rng) < spec.ordinal_fraction) {
      m.kind = FeatureModel::Kind::ordinal;
      m.levels = spec.ordinal_levels;
      // Category probabilities ~ Dirichlet(2); thresholds at the matching
      // quantiles of the latent score's marginal.
      std::gamma_distribution<double> g(2.0, 1.0);
      std::vector<double> p(static_cast<std::size_t>(m.levels));
      for (auto& v : p) v = g(rng);
      const double total = std::accumulate(p.begin(), p.end(), 0.0);
      double norm2 = 1.0;
      for (double a : m.loading) norm2 += a * a;
      double cum = 0;
      for (int k = 0; k + 1 < m.levels; ++k) {
        cum += p[static_cast<std::size_t>(k)] / total;
        m.thresholds.push_back(normal_quantile(cum) * std::sqrt(norm2));
      }
    } else {
      m.kind = FeatureModel::Kind::nominal;
      m.levels = std::uniform_int_distribution<int>(spec.min_cardinality, spec.max_cardinality)(rng);
      for (int k = 0; k < m.levels; ++k) {
        m.nominal_bias.push_back(0.5 * normal(rng));
        m.nominal_loading.push_back(loading());
      }
    }
    plan.models.push_back(m);
  }

  // Schema.
  SchemaBuilder b;
  for (int j = 0; j < spec.continuous; ++j) b.continuous("X" + std::to_string(j + 1));
  static const char* nominal_labels[] = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"};
  for (int i = 0; i < spec.categorical; ++i) {
    const auto& m = plan.models[static_cast<std::size_t>(spec.continuous + i)];
    std::vector<std::string> labels;
    if (m.kind == FeatureModel::Kind::binary) {
      labels = {"Yes", "No"};
    } else if (m.kind == FeatureModel::Kind::ordinal) {
      for (int k = 0; k < m.levels; ++k) labels.push_back(std::to_string(k + 1));
    } else {
      for (int k = 0; k < m.levels; ++k) {
        labels.push_back(k < 12 ? nominal_labels[k] : "v" + std::to_string(k + 1));
      }
    }
    b.categorical(cat_name(i), labels);
  }
  std::vector<std::string> classes;
  for (int k = 0; k < spec.classes; ++k) classes.push_back(std::to_string(k));
  b.categorical("y", classes);
  for (const auto& k : plan.constraints) {
    std::vector<std::pair<std::string, std::string>> chain;
    for (int f : k.chain) {
      std::string label(kBlankLabel);
      if (k.force_value) {
        const auto& m = plan.models[static_cast<std::size_t>(spec.continuous + f)];
        label = m.kind == FeatureModel::Kind::binary ? "Yes"
                : m.kind == FeatureModel::Kind::ordinal ? "1"
                                                        : "a";
      }
      chain.emplace_back(cat_name(f), label);
    }
    b.constraint(cat_name(k.imposer), k.on_blank ? std::string(kBlankLabel) : "No", chain);
  }
  b.target("y");
  plan.schema = b.build();
  return plan;
}

// Draws one respondent's feature values (schema order, target left at 0).
void draw_features(const Plan& plan, Rng& rng, std::vector<double>& row) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto& first = plan.models.empty() ? FeatureModel{} : plan.models.front();
  std::vector<double> u(first.loading.size());
  for (auto& v : u) v = normal(rng);
  auto dot = [&](const std::vector<double>& a) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * u[i];
    return s;
  };
  for (std::size_t f = 0; f < plan.models.size(); ++f) {
    const auto& m = plan.models[f];
    switch (m.kind) {
      case FeatureModel::Kind::continuous:
        row[f] = m.mean + m.sd * (dot(m.loading) + 0.8 * normal(rng));
        break;
      case FeatureModel::Kind::bimodal: {
        const bool high = dot(m.loading) + normal(rng) > 0;
        row[f] = (high ? m.mean + 3 * m.sd : m.mean - 3 * m.sd) + 0.5 * m.sd * normal(rng);
        break;
      }
      case FeatureModel::Kind::binary:
        row[f] = unif(rng) < sigmoid(m.bias + dot(m.loading)) ? 1.0 : 0.0;
        break;
      case FeatureModel::Kind::ordinal: {
        const double t = dot(m.loading) + normal(rng);
        int k = 0;
        while (k < static_cast<int>(m.thresholds.size()) && t > m.thresholds[static_cast<std::size_t>(k)]) ++k;
        row[f] = k;
        break;
      }
      case FeatureModel::Kind::nominal: {
        std::vector<double> w(static_cast<std::size_t>(m.levels));
        double mx = -1e300;
        for (int k = 0; k < m.levels; ++k) {
          w[static_cast<std::size_t>(k)] = m.nominal_bias[static_cast<std::size_t>(k)] + dot(m.nominal_loading[static_cast<std::size_t>(k)]);
          mx = std::max(mx, w[static_cast<std::size_t>(k)]);
        }
        for (auto& v : w) v = std::exp(v - mx);
        row[f] = std::discrete_distribution<int>(w.begin(), w.end())(rng);
        break;
      }
    }
  }
  // Skip logic to fixpoint (the constraint graph is acyclic).
  const auto& schema = plan.schema;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& k : schema.constraints()) {
      if (static_cast<int>(row[static_cast<std::size_t>(k.imposer)]) != k.trigger) continue;
      for (const auto& e : k.chain) {
        auto& cell = row[static_cast<std::size_t>(e.feature)];
        if (static_cast<int>(cell) != e.category) {
          cell = e.category;
          changed = true;
        }
      }
    }
  }
}

std::vector<double> class_scores(const OracleRecord& oracle, const SurveySchema& schema, std::span<const double> row) {
  std::vector<double> s = oracle.intercepts;
  for (std::size_t k = 0; k < s.size(); ++k) {
    for (const auto& t : oracle.terms[k]) {
      const double x = row[static_cast<std::size_t>(t.feature)];
      const auto& f = schema.feature(t.feature);
      switch (t.kind) {
        case SignalTerm::Kind::indicator:
          s[k] += t.weight * (static_cast<int>(x) == t.category ? 1.0 : 0.0);
          break;
        case SignalTerm::Kind::ordinal: {
          const int c = static_cast<int>(x);
          const int levels = f.cardinality() - (f.omissible ? 1 : 0);
          if (c != f.blank_index()) s[k] += t.weight * (static_cast<double>(c) / (levels - 1) - 0.5);
          break;
        }
        case SignalTerm::Kind::linear:
          s[k] += t.weight * (x - t.center) / t.scale;
          break;
      }
    }
  }
  return s;
}

std::vector<double> posterior_from_scores(const std::vector<double>& s, double noise) {
  std::vector<double> p(s.size(), 0.0);
  if (noise == 0) {
    p[static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin())] = 1.0;
    return p;
  }
  const double mx = *std::max_element(s.begin(), s.end());
  double z = 0;
  for (std::size_t k = 0; k < s.size(); ++k) z += (p[k] = std::exp((s[k] - mx) / noise));
  for (auto& v : p) v /= z;
  return p;
}

OracleRecord make_oracle(const PopulationSpec& spec, const Plan& plan) {
  Rng rng(derive_seed(spec.structure_seed, {0x0dac}));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& schema = plan.schema;
  OracleRecord o;
  o.spec = spec;
  o.schema_hash = schema.hash();
  o.noise = spec.noise;
  o.intercepts.assign(static_cast<std::size_t>(spec.classes), 0.0);
  o.terms.assign(static_cast<std::size_t>(spec.classes), {});

  // Candidate signal carriers: BLANK-chain members first, then the rest.
  std::vector<int> chain_members, others;
  for (int i = 0; i < plan.n_cat; ++i) {
    const int f = plan.continuous + i;
    const Role r = plan.role[static_cast<std::size_t>(i)];
    (r == Role::chain || r == Role::subgate ? chain_members : others).push_back(f);
  }
  for (int j = 0; j < plan.continuous; ++j) others.push_back(j);
  std::shuffle(chain_members.begin(), chain_members.end(), rng);
  std::shuffle(others.begin(), others.end(), rng);
  const int want_chain = std::min(static_cast<int>(chain_members.size()),
                                  static_cast<int>(std::lround(spec.signal_features * spec.chain_signal_fraction)));
  std::vector<int> signal(chain_members.begin(), chain_members.begin() + want_chain);
  for (int f : others) {
    if (static_cast<int>(signal.size()) >= spec.signal_features) break;
    signal.push_back(f);
  }
  std::sort(signal.begin(), signal.end());

  for (int k = 1; k < spec.classes; ++k) {
    for (int f : signal) {
      SignalTerm t;
      t.feature = f;
      const auto& m = plan.models[static_cast<std::size_t>(f)];
      if (m.kind == FeatureModel::Kind::continuous || m.kind == FeatureModel::Kind::bimodal) {
        t.kind = SignalTerm::Kind::linear;
        t.center = m.mean;
        t.scale = m.kind == FeatureModel::Kind::bimodal ? 3 * m.sd : m.sd;
        t.weight = 0.5 * spec.effect * normal(rng);
      } else if (m.kind == FeatureModel::Kind::ordinal) {
        t.kind = SignalTerm::Kind::ordinal;
        t.weight = 2.0 * spec.effect * normal(rng);
      } else {
        t.kind = SignalTerm::Kind::indicator;
        t.category = std::uniform_int_distribution<int>(0, m.levels - 1)(rng);
        t.weight = spec.effect * normal(rng);
      }
      o.terms[static_cast<std::size_t>(k)].push_back(t);
    }
  }

  // Intercepts matched to the class priors on a large calibration sample.
  std::vector<double> priors = spec.priors;
  if (priors.empty()) priors.assign(static_cast<std::size_t>(spec.classes), 1.0 / spec.classes);
  Rng cal(derive_seed(spec.structure_seed, {0xca1}));
  const int n_cal = 20000;
  std::vector<std::vector<double>> rows(n_cal, std::vector<double>(static_cast<std::size_t>(schema.num_features())));
  for (auto& r : rows) draw_features(plan, cal, r);
  const double temp = spec.noise > 0 ? spec.noise : 0.05;
  for (int iter = 0; iter < 60; ++iter) {
    std::vector<double> mean(priors.size(), 0.0);
    for (const auto& r : rows) {
      const auto p = posterior_from_scores(class_scores(o, schema, r), temp);
      for (std::size_t k = 0; k < p.size(); ++k) mean[k] += p[k] / n_cal;
    }
    for (std::size_t k = 1; k < priors.size(); ++k) {
      o.intercepts[k] += temp * (std::log(priors[k]) - std::log(std::max(mean[k], 1e-12)) -
                                 (std::log(priors[0]) - std::log(std::max(mean[0], 1e-12))));
    }
  }
  return o;
}

}  // namespace

// ---------------------------------------------------------------------------

Population synthesize_population(const PopulationSpec& spec) {
  spec.validate();
  Plan plan = make_plan(spec);
  OracleRecord oracle = make_oracle(spec, plan);
  const SurveySchema& schema = plan.schema;
  Rng rng(derive_seed(spec.seed, {0x70b}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Table table(static_cast<std::size_t>(schema.num_features()));
  table.reserve(static_cast<std::size_t>(spec.rows));
  std::vector<double> row(static_cast<std::size_t>(schema.num_features()));
  for (int r = 0; r < spec.rows; ++r) {
    std::fill(row.begin(), row.end(), 0.0);
    draw_features(plan, rng, row);
    const auto p = posterior_from_scores(class_scores(oracle, schema, row), spec.noise);
    const double draw = unif(rng);
    int y = 0;
    for (double acc = p[0]; y + 1 < static_cast<int>(p.size()) && draw >= acc; acc += p[static_cast<std::size_t>(++y)]) {
    }
    row[static_cast<std::size_t>(schema.target_index())] = y;
    if (!validate_row(schema, row).empty()) throw NumericError("simulator produced a row violating skip logic");
    table.append_row(row);
  }
  return Population{std::move(table), schema, std::move(oracle)};
}

std::vector<std::vector<double>> oracle_scores(const OracleRecord& oracle, const SurveySchema& schema,
                                               const Table& table) {
  if (oracle.schema_hash != schema.hash()) throw SchemaMismatchError("oracle was planted for a different schema");
  std::vector<std::vector<double>> out;
  out.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) out.push_back(class_scores(oracle, schema, table.row(r)));
  return out;
}

std::vector<std::vector<double>> oracle_posterior(const OracleRecord& oracle, const SurveySchema& schema,
                                                  const Table& table) {
  auto s = oracle_scores(oracle, schema, table);
  // Rank by the smooth posterior even when labels were argmax-drawn.
  const double temp = oracle.noise > 0 ? oracle.noise : 1.0;
  for (auto& row : s) row = posterior_from_scores(row, temp);
  return s;
}

namespace {

std::vector<int> target_labels(const SurveySchema& schema, const Table& table) {
  std::vector<int> y(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) y[r] = table.category(r, static_cast<std::size_t>(schema.target_index()));
  return y;
}

}  // namespace

double oracle_auroc_bound(const OracleRecord& oracle, const SurveySchema& schema, const Table& table) {
  const auto post = oracle_posterior(oracle, schema, table);
  auto a = auroc_macro(post, target_labels(schema, table));
  if (!a) throw ValidationError("oracle bound is undefined: the table holds a single class");
  return *a;
}

double expected_oracle_auroc(const OracleRecord& oracle, const SurveySchema& schema, const Table& table) {
  const auto post = oracle_posterior(oracle, schema, table);
  std::vector<std::vector<double>> truth = post;
  if (oracle.noise == 0) truth = [&] {
    auto s = oracle_scores(oracle, schema, table);
    for (auto& row : s) row = posterior_from_scores(row, 0.0);
    return s;
  }();
  const std::size_t k = post.empty() ? 0 : post.front().size();
  std::vector<double> score(post.size()), p(post.size());
  auto column = [&](std::size_t c) {
    for (std::size_t r = 0; r < post.size(); ++r) {
      score[r] = post[r][c];
      p[r] = truth[r][c];
    }
    return expected_auroc(score, p);
  };
  if (k == 2) return column(1);
  double sum = 0;
  for (std::size_t c = 0; c < k; ++c) sum += column(c);
  return sum / static_cast<double>(k);
}

// ---------------------------------------------------------------------------

namespace {

const char* kind_name(SignalTerm::Kind k) {
  switch (k) {
    case SignalTerm::Kind::indicator:
      return "indicator";
    case SignalTerm::Kind::ordinal:
      return "ordinal";
    case SignalTerm::Kind::linear:
      return "linear";
  }
  return "indicator";
}

}  // namespace

std::string serialize_oracle(const OracleRecord& oracle, const SurveySchema& schema) {
  ordered_json j;
  j["oracle_version"] = 1;
  j["schema_hash"] = hex64(oracle.schema_hash);
  j["noise"] = oracle.noise;
  j["spec"] = spec_to_json(oracle.spec);
  ordered_json classes = ordered_json::array();
  for (std::size_t k = 0; k < oracle.intercepts.size(); ++k) {
    ordered_json c;
    c["label"] = schema.target().categories[k];
    c["intercept"] = oracle.intercepts[k];
    ordered_json terms = ordered_json::array();
    for (const auto& t : oracle.terms[k]) {
      ordered_json tj;
      tj["feature"] = schema.feature(t.feature).name;
      tj["kind"] = kind_name(t.kind);
      if (t.kind == SignalTerm::Kind::indicator) tj["category"] = schema.feature(t.feature).categories[static_cast<std::size_t>(t.category)];
      if (t.kind == SignalTerm::Kind::linear) {
        tj["center"] = t.center;
        tj["scale"] = t.scale;
      }
      tj["weight"] = t.weight;
      terms.push_back(tj);
    }
    c["terms"] = terms;
    classes.push_back(c);
  }
  j["classes"] = classes;
  return j.dump(2) + "\n";
}

OracleRecord parse_oracle(std::string_view document, const SurveySchema& schema) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed oracle file");
  }
  try {
    if (j.at("oracle_version").get<int>() != 1) throw FormatError("unsupported oracle version");
    OracleRecord o;
    o.schema_hash = parse_hex64(j.at("schema_hash").get<std::string>());
    if (o.schema_hash != schema.hash()) throw SchemaMismatchError("oracle was planted for a different schema");
    o.noise = j.at("noise").get<double>();
    o.spec = spec_from_json(j.at("spec"));
    for (const auto& c : j.at("classes")) {
      o.intercepts.push_back(c.at("intercept").get<double>());
      std::vector<SignalTerm> terms;
      for (const auto& tj : c.at("terms")) {
        SignalTerm t;
        t.feature = schema.feature_index(tj.at("feature").get<std::string>());
        const auto kind = tj.at("kind").get<std::string>();
        if (kind == "indicator") {
          t.kind = SignalTerm::Kind::indicator;
          auto cat = schema.find_category(t.feature, tj.at("category").get<std::string>());
          if (!cat) throw ValidationError("oracle term names an unknown category");
          t.category = *cat;
        } else if (kind == "ordinal") {
          t.kind = SignalTerm::Kind::ordinal;
        } else if (kind == "linear") {
          t.kind = SignalTerm::Kind::linear;
          t.center = tj.at("center").get<double>();
          t.scale = tj.at("scale").get<double>();
        } else {
          throw ValidationError("unknown oracle term kind '" + kind + "'");
        }
        t.weight = tj.at("weight").get<double>();
        terms.push_back(t);
      }
      o.terms.push_back(std::move(terms));
    }
    if (o.intercepts.size() != static_cast<std::size_t>(schema.target().cardinality())) {
      throw SchemaMismatchError("oracle class count does not match the target");
    }
    return o;
  } catch (const json::exception& e) {
    throw ParseError("/", std::string("malformed oracle file: ") + e.what());
  }
}

}  // namespace skipgan
