#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skipgan/gan.hpp"

namespace skipgan {

struct SynthesisSpec {
  std::size_t rows = 0;
  /// Target pmf in category order.
  std::vector<double> pmf;
  /// Allowed total-variation distance between the synthetic and target pmf.
  double tolerance = 0.05;

  void validate(int classes) const;
};

/// rows = training size, pmf = empirical training pmf of the target.
SynthesisSpec default_synthesis_spec(const GanModel& model);

/// Largest-remainder apportionment of n seats; equal remainders go to the
/// earlier category.
std::vector<int> apportion(std::size_t n, std::span<const double> pmf);

double total_variation(std::span<const double> p, std::span<const double> q);

/// Exactly spec.rows decoded rows. Class counts come from apportion(); each
/// row is generated with the target condition of its class and keeps that
/// class as its label. Rows are shuffled; no skip-logic repair is applied.
Table generate_table(GanModel& model, const SynthesisSpec& spec, Rng& rng);

struct AugmentedTable {
  Table table;
  /// provenance[i] is true for rows taken from the synthetic table.
  std::vector<bool> synthetic;
};

/// Real rows first, then synthetic rows.
AugmentedTable augment(const SurveySchema& schema, const Table& train, const Table& syn);

/// Sidecar document written next to each synthetic table.
std::string synthesis_metadata(GanModel& model, const SynthesisSpec& spec, std::uint64_t seed, int replicate,
                               const Table& table);

}  // namespace skipgan
