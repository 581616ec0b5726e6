#include "skipgan/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "skipgan/error.hpp"
#include "skipgan/hash.hpp"
#include "skipgan/model_io.hpp"

namespace skipgan {

void SynthesisSpec::validate(int classes) const {
  if (pmf.size() != static_cast<std::size_t>(classes)) throw ValidationError("synthesis pmf must have one entry per class");
  double s = 0;
  for (double p : pmf) {
    if (!(p >= 0)) throw ValidationError("synthesis pmf entries must be nonnegative");
    s += p;
  }
  if (std::abs(s - 1) > 1e-9) throw ValidationError("synthesis pmf must sum to 1");
  if (!(tolerance > 0 && tolerance < 1)) throw ValidationError("synthesis tolerance must lie in (0, 1)");
}

SynthesisSpec default_synthesis_spec(const GanModel& model) {
  SynthesisSpec spec;
  spec.rows = model.train_rows();
  for (int c : model.target_counts) spec.pmf.push_back(static_cast<double>(c) / static_cast<double>(spec.rows));
  return spec;
}

std::vector<int> apportion(std::size_t n, std::span<const double> pmf) {
  std::vector<int> seats(pmf.size());
  // Remainders compared on a 1e-9 grid, so ties between equal exact quotas
  // survive rounding of the pmf.
  std::vector<long long> rem(pmf.size());
  std::size_t given = 0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    double quota = static_cast<double>(n) * pmf[k];
    // Absorb floating error so exact quotas are not split across classes.
    if (std::abs(quota - std::round(quota)) < 1e-9) quota = std::round(quota);
    seats[k] = static_cast<int>(std::floor(quota));
    rem[k] = std::llround((quota - seats[k]) * 1e9);
    given += static_cast<std::size_t>(seats[k]);
  }
  std::vector<std::size_t> order(pmf.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; given < n && i < order.size(); ++i, ++given) ++seats[order[i]];
  return seats;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("total_variation: size mismatch");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return s / 2;
}

Table generate_table(GanModel& model, const SynthesisSpec& spec, Rng& rng) {
  const SurveySchema& schema = model.schema;
  const int y = schema.target_index();
  spec.validate(schema.target().cardinality());
  const auto counts = apportion(spec.rows, spec.pmf);

  Table out(static_cast<std::size_t>(schema.num_features()));
  out.reserve(spec.rows);
  constexpr int kChunk = 512;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (int done = 0; done < counts[k];) {
      const int n = std::min(kChunk, counts[k] - done);
      std::vector<CondVector> conds(static_cast<std::size_t>(n), make_cond(schema, y, static_cast<int>(k)));
      const Mat act = sample_generator(model, conds, rng);
      Table part = model.transformer.decode(RowMatrixXd(act.cast<double>()));
      for (std::size_t r = 0; r < part.rows(); ++r) {
        part(r, static_cast<std::size_t>(y)) = static_cast<double>(k);
        out.append_row(part.row(r));
      }
      done += n;
    }
  }
  std::vector<std::size_t> perm(out.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  out = out.select(perm);

  if (out.rows() != spec.rows) throw NumericError("synthesis produced the wrong number of rows");
  if (spec.rows > 0 && total_variation(target_pmf(schema, out), spec.pmf) > spec.tolerance) {
    throw NumericError("synthetic label distribution is outside the requested tolerance");
  }
  return out;
}

AugmentedTable augment(const SurveySchema& schema, const Table& train, const Table& syn) {
  const auto cols = static_cast<std::size_t>(schema.num_features());
  if (train.cols() != cols || (syn.rows() > 0 && syn.cols() != cols)) {
    throw SchemaMismatchError("augment: tables do not match the schema");
  }
  AugmentedTable a{train, std::vector<bool>(train.rows(), false)};
  a.table.reserve(train.rows() + syn.rows());
  for (std::size_t r = 0; r < syn.rows(); ++r) {
    a.table.append_row(syn.row(r));
    a.synthetic.push_back(true);
  }
  return a;
}

std::string synthesis_metadata(GanModel& model, const SynthesisSpec& spec, std::uint64_t seed, int replicate,
                               const Table& table) {
  nlohmann::ordered_json j;
  j["generator_checksum"] = hex64(model.generator_checksum());
  j["schema_hash"] = hex64(model.schema.hash());
  j["config_hash"] = hex64(config_hash(model.config));
  j["seed"] = seed;
  j["replicate"] = replicate;
  j["rows"] = spec.rows;
  j["pmf"] = spec.pmf;
  j["tolerance"] = spec.tolerance;
  j["class_counts"] = apportion(spec.rows, spec.pmf);
  j["label_pmf"] = target_pmf(model.schema, table);
  return j.dump(2) + "\n";
}

}  // namespace skipgan
