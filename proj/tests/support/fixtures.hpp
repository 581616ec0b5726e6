#pragma once

// Shared test fixtures: random schemas and tables, plus brute-force oracles
// written independently of the library's implementations.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "skipgan/random.hpp"
#include "skipgan/schema.hpp"
#include "skipgan/table.hpp"

namespace skipgan::testing {

struct RandomSchemaOptions {
  int min_categorical = 3, max_categorical = 12;
  int max_continuous = 2;
  int min_cardinality = 2, max_cardinality = 4;
  int max_constraints = 8;
  int max_chain = 4;
  double blank_trigger_probability = 0.3;  // cascades
  double value_force_probability = 0.2;
};

// Features Q0..Qn are ordered; constraints only point forward, so the
// implication graph is acyclic. Each chain feature has one fixed forced
// value, so cascades stay consistent.
inline SurveySchema random_schema(std::uint64_t seed, const RandomSchemaOptions& o = {}) {
  Rng rng(seed);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  const int nc = uni(o.min_categorical, o.max_categorical);
  const int ncont = uni(0, o.max_continuous);
  std::vector<std::vector<std::string>> labels(static_cast<std::size_t>(nc));
  for (auto& l : labels) {
    const int k = uni(o.min_cardinality, o.max_cardinality);
    for (int j = 0; j < k; ++j) l.push_back("c" + std::to_string(j));
  }
  // Forced value per feature: -1 = BLANK, else a real category.
  std::vector<int> forced(static_cast<std::size_t>(nc));
  for (int f = 0; f < nc; ++f) {
    forced[static_cast<std::size_t>(f)] = coin(o.value_force_probability) ? uni(0, static_cast<int>(labels[static_cast<std::size_t>(f)].size()) - 1) : -1;
  }
  struct Pending {
    int imposer;
    std::string trigger;
    std::vector<int> chain;
  };
  std::vector<Pending> cons;
  std::set<std::pair<int, std::string>> used;
  std::set<int> omissible;
  const int n_cons = uni(0, o.max_constraints);
  for (int i = 0; i < n_cons * 3 && static_cast<int>(cons.size()) < n_cons; ++i) {
    const int imposer = uni(0, nc - 2);
    std::string trigger;
    if (omissible.count(imposer) && coin(o.blank_trigger_probability)) {
      trigger = std::string(kBlankLabel);
    } else {
      trigger = labels[static_cast<std::size_t>(imposer)][static_cast<std::size_t>(uni(0, static_cast<int>(labels[static_cast<std::size_t>(imposer)].size()) - 1))];
    }
    if (used.count({imposer, trigger})) continue;
    std::vector<int> later(static_cast<std::size_t>(nc - imposer - 1));
    std::iota(later.begin(), later.end(), imposer + 1);
    std::shuffle(later.begin(), later.end(), rng);
    const int len = std::min<int>(uni(1, o.max_chain), static_cast<int>(later.size()));
    later.resize(static_cast<std::size_t>(len));
    std::sort(later.begin(), later.end());
    used.insert({imposer, trigger});
    for (int f : later) omissible.insert(f);
    cons.push_back({imposer, trigger, later});
  }
  SchemaBuilder b;
  for (int f = 0; f < nc; ++f) b.categorical("Q" + std::to_string(f), labels[static_cast<std::size_t>(f)]);
  for (int c = 0; c < ncont; ++c) b.continuous("X" + std::to_string(c));
  b.categorical("y", {"neg", "pos"});
  for (const auto& c : cons) {
    std::vector<std::pair<std::string, std::string>> chain;
    for (int f : c.chain) {
      const int v = forced[static_cast<std::size_t>(f)];
      chain.emplace_back("Q" + std::to_string(f),
                         v < 0 ? std::string(kBlankLabel) : labels[static_cast<std::size_t>(f)][static_cast<std::size_t>(v)]);
    }
    b.constraint("Q" + std::to_string(c.imposer), c.trigger, chain);
  }
  b.target("y");
  return b.build();
}

// Row of uniformly random categories and N(0, 1) continuous values.
inline std::vector<double> random_row(const SurveySchema& s, Rng& rng) {
  std::vector<double> row(static_cast<std::size_t>(s.num_features()));
  std::normal_distribution<double> z;
  for (int f = 0; f < s.num_features(); ++f) {
    if (s.feature(f).is_categorical()) {
      row[static_cast<std::size_t>(f)] = std::uniform_int_distribution<int>(0, s.feature(f).cardinality() - 1)(rng);
    } else {
      row[static_cast<std::size_t>(f)] = z(rng);
    }
  }
  return row;
}

// Applies skip logic in feature order until nothing changes.
inline void conform(const SurveySchema& s, std::vector<double>& row) {
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& k : s.constraints()) {
      if (static_cast<int>(row[static_cast<std::size_t>(k.imposer)]) != k.trigger) continue;
      for (const auto& e : k.chain) {
        if (static_cast<int>(row[static_cast<std::size_t>(e.feature)]) != e.category) {
          row[static_cast<std::size_t>(e.feature)] = e.category;
          changed = true;
        }
      }
    }
  }
}

// Brute-force conflict: explicit one-hot vectors of each triggered
// constraint's chain, Hamming distance over the concatenated width.
inline double brute_force_conflict(const SurveySchema& s, const Table& t) {
  if (t.rows() == 0) return 0.0;
  double total = 0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    std::vector<double> per;
    for (const auto& k : s.constraints()) {
      if (t.category(r, static_cast<std::size_t>(k.imposer)) != k.trigger) continue;
      std::vector<int> have, want;
      for (const auto& e : k.chain) {
        const int card = s.feature(e.feature).cardinality();
        for (int j = 0; j < card; ++j) {
          have.push_back(t.category(r, static_cast<std::size_t>(e.feature)) == j ? 1 : 0);
          want.push_back(e.category == j ? 1 : 0);
        }
      }
      int ham = 0;
      for (std::size_t i = 0; i < have.size(); ++i) ham += have[i] != want[i];
      per.push_back(static_cast<double>(ham) / static_cast<double>(have.size()));
    }
    double row = 0;
    for (double v : per) row += v;
    total += per.empty() ? 0.0 : row / static_cast<double>(per.size());
  }
  return total / static_cast<double>(t.rows());
}

// Fixpoint closure of one assignment computed from the raw constraint list.
inline std::set<std::pair<int, int>> brute_force_closure(const SurveySchema& s, int feature, int category) {
  std::set<std::pair<int, int>> out{{feature, category}};
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& k : s.constraints()) {
      if (!out.count({k.imposer, k.trigger})) continue;
      for (const auto& e : k.chain) grew |= out.insert({e.feature, e.category}).second;
    }
  }
  return out;
}

// Exhaustive pair counting; ties count one half.
inline double brute_force_auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      den += 1;
      num += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    }
  }
  return num / den;
}

// Largest remainder with exact integer arithmetic: quota_k = n * c_k / N.
inline std::vector<int> brute_force_apportion(std::size_t n, const std::vector<int>& counts) {
  long long total = 0;
  for (int c : counts) total += c;
  std::vector<int> seats(counts.size());
  std::vector<std::pair<long long, std::size_t>> rem;
  long long given = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const long long num = static_cast<long long>(n) * counts[k];
    seats[k] = static_cast<int>(num / total);
    given += seats[k];
    rem.push_back({num % total, k});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t i = 0; given < static_cast<long long>(n); ++i, ++given) ++seats[rem[i].second];
  return seats;
}

}  // namespace skipgan::testing
