#include "skipgan/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>

#include "skipgan/error.hpp"

namespace skipgan {

namespace {

using boost::math::digamma;

// 1-D Lloyd iterations from quantile seeds; returns hard assignments.
std::vector<int> kmeans_assign(std::span<const double> x, int k) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> centers(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    double q = (j + 0.5) / k;
    centers[static_cast<std::size_t>(j)] = sorted[static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1))];
  }
  std::vector<int> assign(x.size(), 0);
  for (int it = 0; it < 50; ++it) {
    bool changed = false;
    for (std::size_t n = 0; n < x.size(); ++n) {
      int best = 0;
      double bd = std::abs(x[n] - centers[0]);
      for (int j = 1; j < k; ++j) {
        double d = std::abs(x[n] - centers[static_cast<std::size_t>(j)]);
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      if (assign[n] != best) changed = true;
      assign[n] = best;
    }
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0), cnt(static_cast<std::size_t>(k), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
      sum[static_cast<std::size_t>(assign[n])] += x[n];
      cnt[static_cast<std::size_t>(assign[n])] += 1;
    }
    for (int j = 0; j < k; ++j) {
      if (cnt[static_cast<std::size_t>(j)] > 0) centers[static_cast<std::size_t>(j)] = sum[static_cast<std::size_t>(j)] / cnt[static_cast<std::size_t>(j)];
    }
    if (!changed && it > 0) break;
  }
  return assign;
}

}  // namespace

std::vector<GaussianMode> fit_mixture(std::span<const double> x, const MixtureOptions& opt) {
  if (x.empty()) throw ValidationError("cannot fit a mixture to an empty column");
  const double n = static_cast<double>(x.size());
  const double mean0 = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var0 = 0;
  for (double v : x) var0 += (v - mean0) * (v - mean0);
  var0 /= n;
  if (!(var0 > 1e-12 * std::max(1.0, mean0 * mean0))) return {{mean0, 1.0, 1.0}};

  const int k = std::max(1, std::min<int>(opt.max_modes, static_cast<int>(x.size())));
  const std::size_t K = static_cast<std::size_t>(k);
  const std::size_t N = x.size();
  // Priors follow the usual defaults: mean prior = data mean, precision
  // prior 1, one degree of freedom, covariance prior = data variance.
  const double beta0 = 1.0, nu0 = 1.0, cov0 = var0;

  std::vector<double> resp(N * K, 0.0);
  {
    auto assign = kmeans_assign(x, k);
    for (std::size_t i = 0; i < N; ++i) resp[i * K + static_cast<std::size_t>(assign[i])] = 1.0;
  }

  std::vector<double> nk(K), xbar(K), sk(K), beta(K), m(K), nu(K), cov(K), g1(K), g2(K), elog_pi(K);
  auto m_step = [&] {
    for (std::size_t j = 0; j < K; ++j) {
      double s = 1e-10, sx = 0;
      for (std::size_t i = 0; i < N; ++i) {
        s += resp[i * K + j];
        sx += resp[i * K + j] * x[i];
      }
      nk[j] = s;
      xbar[j] = sx / s;
      double ss = 0;
      for (std::size_t i = 0; i < N; ++i) ss += resp[i * K + j] * (x[i] - xbar[j]) * (x[i] - xbar[j]);
      sk[j] = ss / s;
      beta[j] = beta0 + nk[j];
      m[j] = (beta0 * mean0 + nk[j] * xbar[j]) / beta[j];
      nu[j] = nu0 + nk[j];
      cov[j] = (cov0 + nk[j] * sk[j] + beta0 * nk[j] / beta[j] * (xbar[j] - mean0) * (xbar[j] - mean0)) / nu[j];
    }
    double tail = 0;
    for (std::size_t j = K; j-- > 0;) {
      g1[j] = 1.0 + nk[j];
      g2[j] = opt.concentration + tail;
      tail += nk[j];
    }
    double acc = 0;
    for (std::size_t j = 0; j < K; ++j) {
      const double dsum = digamma(g1[j] + g2[j]);
      elog_pi[j] = digamma(g1[j]) - dsum + acc;
      acc += digamma(g2[j]) - dsum;
    }
  };

  double prev = -std::numeric_limits<double>::infinity();
  std::vector<double> logp(K);
  for (int it = 0; it < opt.max_iterations; ++it) {
    m_step();
    double total = 0;
    for (std::size_t i = 0; i < N; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < K; ++j) {
        const double prec = 1.0 / cov[j];
        const double d = x[i] - m[j];
        const double log_gauss = -0.5 * std::log(2 * std::numbers::pi) + 0.5 * std::log(prec) - 0.5 * prec * d * d -
                                 0.5 * std::log(nu[j]);
        const double log_lambda = std::log(2.0) + digamma(0.5 * nu[j]);
        logp[j] = elog_pi[j] + log_gauss + 0.5 * (log_lambda - 1.0 / beta[j]);
        mx = std::max(mx, logp[j]);
      }
      double z = 0;
      for (std::size_t j = 0; j < K; ++j) z += std::exp(logp[j] - mx);
      const double lse = mx + std::log(z);
      total += lse;
      for (std::size_t j = 0; j < K; ++j) resp[i * K + j] = std::exp(logp[j] - lse);
    }
    total /= n;
    if (std::abs(total - prev) < 1e-7) break;
    prev = total;
  }
  m_step();

  std::vector<double> w(K);
  double rest = 1.0, wsum = 0;
  for (std::size_t j = 0; j < K; ++j) {
    const double v = g1[j] / (g1[j] + g2[j]);
    w[j] = v * rest;
    rest *= 1.0 - v;
    wsum += w[j];
  }
  std::vector<GaussianMode> modes;
  for (std::size_t j = 0; j < K; ++j) {
    w[j] /= wsum;
    if (w[j] > opt.weight_threshold) modes.push_back({m[j], std::sqrt(cov[j]), w[j]});
  }
  if (modes.empty()) {
    auto j = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    modes.push_back({m[j], std::sqrt(cov[j]), 1.0});
  }
  double kept = 0;
  for (const auto& md : modes) kept += md.weight;
  for (auto& md : modes) md.weight /= kept;
  return modes;
}

ColumnLayout make_layout(const SurveySchema& schema, const ContinuousNormalizer& normalizer) {
  ColumnLayout layout;
  int offset = 0;
  for (int f = 0; f < schema.num_features(); ++f) {
    const auto& spec = schema.feature(f);
    int width = spec.is_categorical() ? spec.cardinality()
                                      : 1 + static_cast<int>(normalizer.modes.at(static_cast<std::size_t>(f)).size());
    layout.spans.push_back({offset, width});
    offset += width;
  }
  layout.total_width = offset;
  return layout;
}

DataTransformer::DataTransformer(const SurveySchema& schema, ContinuousNormalizer normalizer)
    : schema_(schema), normalizer_(std::move(normalizer)) {
  if (normalizer_.modes.size() != static_cast<std::size_t>(schema.num_features())) {
    throw ValidationError("normalizer does not match schema feature count");
  }
  for (int f = 0; f < schema.num_features(); ++f) {
    const auto& modes = normalizer_.modes[static_cast<std::size_t>(f)];
    if (schema.feature(f).is_categorical() != modes.empty()) {
      throw ValidationError("normalizer modes inconsistent with feature '" + schema.feature(f).name + "'");
    }
    for (const auto& md : modes) {
      if (!(md.stddev > 0) || !(md.weight > 0)) throw ValidationError("invalid mixture mode for '" + schema.feature(f).name + "'");
    }
  }
  layout_ = make_layout(schema_, normalizer_);
}

DataTransformer DataTransformer::fit(const SurveySchema& schema, const Table& table, const MixtureOptions& options) {
  validate_table(schema, table);
  if (table.rows() == 0) throw ValidationError("cannot fit a transformer on an empty table");
  ContinuousNormalizer norm;
  norm.modes.resize(static_cast<std::size_t>(schema.num_features()));
  for (int f : schema.continuous_features()) {
    norm.modes[static_cast<std::size_t>(f)] = fit_mixture(table.column(static_cast<std::size_t>(f)), options);
  }
  return DataTransformer(schema, std::move(norm));
}

std::pair<double, int> DataTransformer::encode_value(int f, double x) const {
  const auto& modes = normalizer_.modes[static_cast<std::size_t>(f)];
  int best = 0;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < modes.size(); ++j) {
    const double z = (x - modes[j].mean) / modes[j].stddev;
    const double lp = std::log(modes[j].weight) - std::log(modes[j].stddev) - 0.5 * z * z;
    if (lp > best_lp) {
      best_lp = lp;
      best = static_cast<int>(j);
    }
  }
  const auto& md = modes[static_cast<std::size_t>(best)];
  const double scalar = std::clamp((x - md.mean) / (4.0 * md.stddev), -1.0, 1.0);
  return {scalar, best};
}

double DataTransformer::decode_value(int f, double scalar, int mode) const {
  const auto& md = normalizer_.modes[static_cast<std::size_t>(f)].at(static_cast<std::size_t>(mode));
  return std::clamp(scalar, -1.0, 1.0) * 4.0 * md.stddev + md.mean;
}

EncodedTable DataTransformer::encode(const Table& table) const {
  validate_table(schema_, table);
  EncodedTable out;
  out.layout = layout_;
  out.data = RowMatrixXd::Zero(static_cast<Eigen::Index>(table.rows()), layout_.total_width);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (int f = 0; f < schema_.num_features(); ++f) {
      const Span& s = layout_.spans[static_cast<std::size_t>(f)];
      const auto ri = static_cast<Eigen::Index>(r);
      if (schema_.feature(f).is_categorical()) {
        out.data(ri, s.offset + table.category(r, static_cast<std::size_t>(f))) = 1.0;
      } else {
        auto [scalar, mode] = encode_value(f, table(r, static_cast<std::size_t>(f)));
        out.data(ri, s.offset) = scalar;
        out.data(ri, s.offset + 1 + mode) = 1.0;
      }
    }
  }
  return out;
}

Table DataTransformer::decode(const EncodedTable& encoded) const {
  if (!(encoded.layout == layout_)) throw ValidationError("encoded table layout does not match the transformer");
  return decode(encoded.data);
}

Table DataTransformer::decode(const RowMatrixXd& data) const {
  if (data.cols() != layout_.total_width) {
    throw ValidationError("malformed encoded width " + std::to_string(data.cols()) + " != " + std::to_string(layout_.total_width));
  }
  Table out(static_cast<std::size_t>(data.rows()), static_cast<std::size_t>(schema_.num_features()));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (int f = 0; f < schema_.num_features(); ++f) {
      const Span& s = layout_.spans[static_cast<std::size_t>(f)];
      const auto ru = static_cast<std::size_t>(r);
      if (schema_.feature(f).is_categorical()) {
        Eigen::Index k = 0;
        data.row(r).segment(s.offset, s.width).maxCoeff(&k);
        out(ru, static_cast<std::size_t>(f)) = static_cast<double>(k);
      } else {
        Eigen::Index mode = 0;
        data.row(r).segment(s.offset + 1, s.width - 1).maxCoeff(&mode);
        out(ru, static_cast<std::size_t>(f)) = decode_value(f, data(r, s.offset), static_cast<int>(mode));
      }
    }
  }
  return out;
}

}  // namespace skipgan
