#include "skipgan/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skipgan/error.hpp"
#include "skipgan/networks.hpp"
#include "skipgan/random.hpp"

namespace skipgan {

FeatureEncoder::FeatureEncoder(const SurveySchema& schema, const Table& fit_table) : schema_(schema) {
  const int n = schema.num_features();
  offsets_.assign(static_cast<std::size_t>(n), -1);
  mean_.assign(static_cast<std::size_t>(n), 0.0);
  scale_.assign(static_cast<std::size_t>(n), 1.0);
  for (int f = 0; f < n; ++f) {
    if (f == schema.target_index()) continue;
    offsets_[static_cast<std::size_t>(f)] = width_;
    if (schema.feature(f).is_categorical()) {
      width_ += schema.feature(f).cardinality();
      continue;
    }
    width_ += 1;
    const auto col = fit_table.column(static_cast<std::size_t>(f));
    if (col.empty()) continue;
    const double m = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
    double v = 0;
    for (double x : col) v += (x - m) * (x - m);
    v /= static_cast<double>(col.size());
    mean_[static_cast<std::size_t>(f)] = m;
    scale_[static_cast<std::size_t>(f)] = v > 0 ? std::sqrt(v) : 1.0;
  }
}

FeatureMatrix FeatureEncoder::transform(const Table& table) const {
  FeatureMatrix x = FeatureMatrix::Zero(static_cast<Eigen::Index>(table.rows()), width_);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (int f = 0; f < schema_.num_features(); ++f) {
      const int off = offsets_[static_cast<std::size_t>(f)];
      if (off < 0) continue;
      const double v = table(r, static_cast<std::size_t>(f));
      if (schema_.feature(f).is_categorical()) {
        x(static_cast<Eigen::Index>(r), off + static_cast<int>(v)) = 1.0;
      } else {
        x(static_cast<Eigen::Index>(r), off) = (v - mean_[static_cast<std::size_t>(f)]) / scale_[static_cast<std::size_t>(f)];
      }
    }
  }
  return x;
}

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::elastic_net:
      return "elastic_net";
    case ClassifierKind::decision_tree:
      return "decision_tree";
    case ClassifierKind::random_forest:
      return "random_forest";
    case ClassifierKind::gradient_boosting:
      return "gradient_boosting";
    case ClassifierKind::mlp:
      return "mlp";
    case ClassifierKind::feature_selecting:
      return "feature_selecting";
  }
  return "elastic_net";
}

ClassifierKind parse_classifier_kind(std::string_view s) {
  for (auto k : {ClassifierKind::elastic_net, ClassifierKind::decision_tree, ClassifierKind::random_forest,
                 ClassifierKind::gradient_boosting, ClassifierKind::mlp, ClassifierKind::feature_selecting}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown classifier kind '" + std::string(s) + "'");
}

std::vector<ClassifierSpec> default_zoo() {
  std::vector<ClassifierSpec> zoo;
  ClassifierSpec s;
  s.kind = ClassifierKind::elastic_net;
  s.name = "logistic-enet";
  zoo.push_back(s);

  s = {};
  s.kind = ClassifierKind::decision_tree;
  s.name = "cart";
  s.max_depth = 8;
  s.min_samples_leaf = 2;
  zoo.push_back(s);

  s = {};
  s.kind = ClassifierKind::random_forest;
  s.name = "random-forest";
  s.trees = 100;
  s.max_depth = 16;
  zoo.push_back(s);

  s = {};
  s.kind = ClassifierKind::gradient_boosting;
  s.name = "gbt-shallow";
  s.trees = 100;
  s.max_depth = 3;
  s.learning_rate = 0.1;
  s.feature_fraction = 1.0;
  zoo.push_back(s);

  s = {};
  s.kind = ClassifierKind::gradient_boosting;
  s.name = "gbt-deep";
  s.trees = 150;
  s.max_depth = 5;
  s.learning_rate = 0.05;
  s.subsample = 0.8;
  s.feature_fraction = 0.5;
  s.min_samples_leaf = 3;
  zoo.push_back(s);

  s = {};
  s.kind = ClassifierKind::mlp;
  s.name = "mlp";
  s.hidden = {100, 100, 10};
  s.epochs = 100;
  zoo.push_back(s);

  s = {};
  s.kind = ClassifierKind::feature_selecting;
  s.name = "fs-net";
  s.hidden = {64, 64};
  s.epochs = 60;
  zoo.push_back(s);
  return zoo;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Elastic-net logistic regression by accelerated proximal gradient.

class ElasticNet final : public Classifier {
 public:
  explicit ElasticNet(const ClassifierSpec& s) : spec_(s) {}

  void fit(const FeatureMatrix& x, std::span<const int> y, std::uint64_t) override {
    const Eigen::Index n = x.rows(), d = x.cols();
    Eigen::VectorXd yv(n);
    for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];
    // Largest singular value of [X 1] by power iteration.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(d + 1).normalized();
    double sigma2 = 1;
    for (int it = 0; it < 50; ++it) {
      Eigen::VectorXd xv = x * v.head(d);
      xv.array() += v(d);
      Eigen::VectorXd w(d + 1);
      w.head(d) = x.transpose() * xv;
      w(d) = xv.sum();
      sigma2 = w.norm();
      if (sigma2 == 0) break;
      v = w / sigma2;
    }
    const double lam = spec_.lambda, alpha = spec_.l1_ratio;
    const double lip = sigma2 / (4.0 * static_cast<double>(n)) + lam * (1 - alpha);
    const double step = 1.0 / std::max(lip, 1e-12);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d), wz = w, w_prev = w;
    double b = 0, bz = 0, b_prev = 0, t = 1;
    for (int it = 0; it < spec_.iterations; ++it) {
      Eigen::VectorXd p = x * wz;
      p.array() += bz;
      p = p.unaryExpr([](double z) { return sigmoid(z); });
      const Eigen::VectorXd r = (p - yv) / static_cast<double>(n);
      Eigen::VectorXd gw = x.transpose() * r + lam * (1 - alpha) * wz;
      const double gb = r.sum();
      w_prev = w;
      b_prev = b;
      w = wz - step * gw;
      const double thr = step * lam * alpha;
      w = w.unaryExpr([thr](double z) { return z > thr ? z - thr : (z < -thr ? z + thr : 0.0); });
      b = bz - step * gb;
      const double t_next = (1 + std::sqrt(1 + 4 * t * t)) / 2;
      wz = w + ((t - 1) / t_next) * (w - w_prev);
      bz = b + ((t - 1) / t_next) * (b - b_prev);
      t = t_next;
    }
    w_ = w;
    b_ = b;
  }

  std::vector<double> predict(const FeatureMatrix& x) const override {
    Eigen::VectorXd z = x * w_;
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = sigmoid(z(i) + b_);
    return out;
  }

 private:
  ClassifierSpec spec_;
  Eigen::VectorXd w_;
  double b_ = 0;
};

// ---------------------------------------------------------------------------
// Histogram trees on (gradient, hessian) pairs. With g = -y, h = 1 and no
// L2 term, the split gain is the Gini decrease for 0/1 labels and leaves
// hold class frequencies.

struct Bins {
  std::vector<std::vector<double>> edges;  // per feature, ascending upper edges
  std::vector<std::vector<std::uint8_t>> codes;  // per feature, per row

  void fit(const FeatureMatrix& x, int max_bins) {
    const Eigen::Index n = x.rows(), d = x.cols();
    edges.assign(static_cast<std::size_t>(d), {});
    for (Eigen::Index f = 0; f < d; ++f) {
      std::vector<double> v(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = x(i, f);
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      auto& e = edges[static_cast<std::size_t>(f)];
      if (static_cast<int>(v.size()) <= max_bins) {
        e = v;
      } else {
        for (int b = 1; b <= max_bins; ++b) {
          e.push_back(v[std::min(v.size() - 1, static_cast<std::size_t>(b) * v.size() / static_cast<std::size_t>(max_bins))]);
        }
        e.back() = v.back();
        e.erase(std::unique(e.begin(), e.end()), e.end());
      }
    }
  }

  int code(std::size_t f, double value) const {
    const auto& e = edges[f];
    const auto it = std::lower_bound(e.begin(), e.end(), value);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - e.begin(), static_cast<std::ptrdiff_t>(e.size()) - 1));
  }

  void encode(const FeatureMatrix& x) {
    codes.assign(edges.size(), std::vector<std::uint8_t>(static_cast<std::size_t>(x.rows())));
    for (std::size_t f = 0; f < edges.size(); ++f) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) codes[f][static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(code(f, x(i, static_cast<Eigen::Index>(f))));
    }
  }
};

struct TreeParams {
  int max_depth = 6;
  int min_samples_leaf = 1;
  int features_per_split = 0;  // 0: all
  double l2 = 0;
};

class Tree {
 public:
  void build(const Bins& bins, const std::vector<double>& g, const std::vector<double>& h, std::vector<std::size_t> rows,
             const TreeParams& p, Rng& rng) {
    nodes_.clear();
    grow(bins, g, h, rows, 0, p, rng);
  }

  double predict(const Bins& bins, std::span<const double> x) const {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& nd = nodes_[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(nd.feature)] <= bins.edges[static_cast<std::size_t>(nd.feature)][static_cast<std::size_t>(nd.bin)] ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
  }

 private:
  struct Node {
    int feature = -1;
    int bin = 0;
    int left = -1, right = -1;
    double value = 0;
  };

  int grow(const Bins& bins, const std::vector<double>& g, const std::vector<double>& h, std::vector<std::size_t>& rows,
           int depth, const TreeParams& p, Rng& rng) {
    double G = 0, H = 0;
    for (auto r : rows) {
      G += g[r];
      H += h[r];
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[static_cast<std::size_t>(id)].value = H + p.l2 > 0 ? -G / (H + p.l2) : 0.0;
    const auto n = static_cast<int>(rows.size());
    if (depth >= p.max_depth || n < 2 * p.min_samples_leaf || n < 2) return id;

    const int d = static_cast<int>(bins.edges.size());
    std::vector<int> feats(static_cast<std::size_t>(d));
    std::iota(feats.begin(), feats.end(), 0);
    if (p.features_per_split > 0 && p.features_per_split < d) {
      for (int i = 0; i < p.features_per_split; ++i) {
        std::uniform_int_distribution<int> pick(i, d - 1);
        std::swap(feats[static_cast<std::size_t>(i)], feats[static_cast<std::size_t>(pick(rng))]);
      }
      feats.resize(static_cast<std::size_t>(p.features_per_split));
    }
    const double parent = G * G / (H + p.l2);
    double best_gain = 1e-12;
    int best_f = -1, best_b = -1;
    std::vector<double> hg, hh;
    std::vector<int> hc;
    for (int f : feats) {
      const auto& e = bins.edges[static_cast<std::size_t>(f)];
      if (e.size() < 2) continue;
      hg.assign(e.size(), 0.0);
      hh.assign(e.size(), 0.0);
      hc.assign(e.size(), 0);
      const auto& codes = bins.codes[static_cast<std::size_t>(f)];
      for (auto r : rows) {
        const auto c = codes[r];
        hg[c] += g[r];
        hh[c] += h[r];
        ++hc[c];
      }
      double gl = 0, hl = 0;
      int cl = 0;
      for (std::size_t b = 0; b + 1 < e.size(); ++b) {
        gl += hg[b];
        hl += hh[b];
        cl += hc[b];
        if (cl < p.min_samples_leaf) continue;
        if (n - cl < p.min_samples_leaf) break;
        const double gr = G - gl, hr = H - hl;
        if (hl + p.l2 <= 0 || hr + p.l2 <= 0) continue;
        const double gain = gl * gl / (hl + p.l2) + gr * gr / (hr + p.l2) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = f;
          best_b = static_cast<int>(b);
        }
      }
    }
    if (best_f < 0) return id;
    std::vector<std::size_t> left, right;
    const auto& codes = bins.codes[static_cast<std::size_t>(best_f)];
    for (auto r : rows) (codes[r] <= best_b ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    nodes_[static_cast<std::size_t>(id)].feature = best_f;
    nodes_[static_cast<std::size_t>(id)].bin = best_b;
    const int l = grow(bins, g, h, left, depth + 1, p, rng);
    const int r = grow(bins, g, h, right, depth + 1, p, rng);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  std::vector<Node> nodes_;
};

std::span<const double> row_of(const FeatureMatrix& x, Eigen::Index r) {
  return {x.data() + r * x.cols(), static_cast<std::size_t>(x.cols())};
}

class Forest final : public Classifier {
 public:
  Forest(const ClassifierSpec& s, bool bagging) : spec_(s), bagging_(bagging) {}

  void fit(const FeatureMatrix& x, std::span<const int> y, std::uint64_t seed) override {
    Rng rng(seed);
    bins_.fit(x, 32);
    bins_.encode(x);
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> g(n), h(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) g[i] = -static_cast<double>(y[i]);
    TreeParams p;
    p.max_depth = spec_.max_depth;
    p.min_samples_leaf = spec_.min_samples_leaf;
    p.l2 = 0;
    const int d = static_cast<int>(x.cols());
    if (bagging_) {
      p.features_per_split = spec_.feature_fraction > 0 ? std::max(1, static_cast<int>(spec_.feature_fraction * d))
                                                        : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(d))));
    }
    const int count = bagging_ ? spec_.trees : 1;
    trees_.assign(static_cast<std::size_t>(count), {});
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (auto& t : trees_) {
      std::vector<std::size_t> rows(n);
      if (bagging_) {
        for (auto& r : rows) r = pick(rng);
      } else {
        std::iota(rows.begin(), rows.end(), std::size_t{0});
      }
      t.build(bins_, g, h, std::move(rows), p, rng);
    }
  }

  std::vector<double> predict(const FeatureMatrix& x) const override {
    std::vector<double> out(static_cast<std::size_t>(x.rows()), 0.0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double s = 0;
      for (const auto& t : trees_) s += t.predict(bins_, row_of(x, i));
      out[static_cast<std::size_t>(i)] = s / static_cast<double>(trees_.size());
    }
    return out;
  }

 private:
  ClassifierSpec spec_;
  bool bagging_;
  Bins bins_;
  std::vector<Tree> trees_;
};

class Boosting final : public Classifier {
 public:
  explicit Boosting(const ClassifierSpec& s) : spec_(s) {}

  void fit(const FeatureMatrix& x, std::span<const int> y, std::uint64_t seed) override {
    Rng rng(seed);
    bins_.fit(x, 32);
    bins_.encode(x);
    const auto n = static_cast<std::size_t>(x.rows());
    double pos = 0;
    for (int v : y) pos += v;
    const double prior = std::clamp(pos / static_cast<double>(n), 1e-6, 1 - 1e-6);
    base_ = std::log(prior / (1 - prior));
    std::vector<double> f(n, base_), g(n), h(n);
    TreeParams p;
    p.max_depth = spec_.max_depth;
    p.min_samples_leaf = spec_.min_samples_leaf;
    p.l2 = spec_.l2;
    const int d = static_cast<int>(x.cols());
    if (spec_.feature_fraction > 0 && spec_.feature_fraction < 1) {
      p.features_per_split = std::max(1, static_cast<int>(spec_.feature_fraction * d));
    }
    std::bernoulli_distribution keep(spec_.subsample);
    trees_.assign(static_cast<std::size_t>(spec_.trees), {});
    for (auto& t : trees_) {
      for (std::size_t i = 0; i < n; ++i) {
        const double pr = sigmoid(f[i]);
        g[i] = pr - y[i];
        h[i] = std::max(pr * (1 - pr), 1e-12);
      }
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < n; ++i) {
        if (spec_.subsample >= 1 || keep(rng)) rows.push_back(i);
      }
      if (rows.empty()) rows.push_back(0);
      t.build(bins_, g, h, std::move(rows), p, rng);
      for (std::size_t i = 0; i < n; ++i) f[i] += spec_.learning_rate * t.predict(bins_, row_of(x, static_cast<Eigen::Index>(i)));
    }
  }

  std::vector<double> predict(const FeatureMatrix& x) const override {
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double s = base_;
      for (const auto& t : trees_) s += spec_.learning_rate * t.predict(bins_, row_of(x, i));
      out[static_cast<std::size_t>(i)] = sigmoid(s);
    }
    return out;
  }

 private:
  ClassifierSpec spec_;
  Bins bins_;
  std::vector<Tree> trees_;
  double base_ = 0;
};

// ---------------------------------------------------------------------------
// Networks

template <typename Net>
void minibatch_train(Net& net, const Mat& x, std::span<const int> y, const ClassifierSpec& spec, Rng& rng) {
  nn::AdamOptions opt;
  opt.learning_rate = spec.step_size;
  opt.beta1 = 0.9;
  opt.beta2 = 0.999;
  opt.weight_decay = spec.weight_decay;
  nn::Adam<float> adam(net.parameters(), opt);
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(spec.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(spec.batch_size));
      Mat xb(static_cast<Eigen::Index>(end - start), x.cols());
      Mat d(xb.rows(), 1);
      adam.zero_grad();
      for (std::size_t i = start; i < end; ++i) xb.row(static_cast<Eigen::Index>(i - start)) = x.row(static_cast<Eigen::Index>(order[i]));
      const Mat logits = net.forward(xb);
      for (Eigen::Index i = 0; i < xb.rows(); ++i) {
        d(i, 0) = static_cast<float>((sigmoid(logits(i, 0)) - y[order[start + static_cast<std::size_t>(i)]]) / static_cast<double>(xb.rows()));
      }
      net.backward(d);
      adam.step();
    }
  }
}

class MlpNet {
 public:
  MlpNet(int in, const std::vector<int>& hidden, Rng& rng) {
    int prev = in;
    for (int h : hidden) {
      layers_.emplace_back(prev, h, rng);
      prev = h;
    }
    layers_.emplace_back(prev, 1, rng);
    acts_.resize(hidden.size());
  }
  Mat forward(const Mat& x) {
    Mat h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i].forward(h);
      if (i < acts_.size()) h = acts_[i].forward(h);
    }
    return h;
  }
  void backward(const Mat& d_logits) {
    Mat d = d_logits;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      d = layers_[i].backward(d);
      if (i > 0) d = acts_[i - 1].backward(d);
    }
  }
  nn::ParameterList<float> parameters() {
    nn::ParameterList<float> p;
    for (auto& l : layers_) l.collect(p);
    return p;
  }

 private:
  std::vector<nn::Linear<float>> layers_;
  std::vector<nn::ReLU<float>> acts_;
};

class Mlp final : public Classifier {
 public:
  explicit Mlp(const ClassifierSpec& s) : spec_(s) {}
  void fit(const FeatureMatrix& x, std::span<const int> y, std::uint64_t seed) override {
    Rng rng(seed);
    net_ = std::make_unique<MlpNet>(static_cast<int>(x.cols()), spec_.hidden, rng);
    minibatch_train(*net_, x.cast<float>(), y, spec_, rng);
  }
  std::vector<double> predict(const FeatureMatrix& x) const override {
    const Mat logits = net_->forward(x.cast<float>());
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = sigmoid(logits(i, 0));
    return out;
  }

 private:
  ClassifierSpec spec_;
  std::unique_ptr<MlpNet> net_;
};

class FeatureSelecting final : public Classifier {
 public:
  explicit FeatureSelecting(const ClassifierSpec& s) : spec_(s) {}

  struct Adapter {
    AuxClassifier& c;
    Mat forward(const Mat& x) {
      c.prepare();
      return c.forward(x);
    }
    void backward(const Mat& d) {
      c.backward(d, true);
      c.backward_auxiliary();
    }
    nn::ParameterList<float> parameters() { return c.parameters(); }
  };

  void fit(const FeatureMatrix& x, std::span<const int> y, std::uint64_t seed) override {
    Rng rng(seed);
    AuxClassifier::Options o;
    o.hidden = spec_.hidden.empty() ? 64 : spec_.hidden.front();
    o.aux_hidden = spec_.hidden.size() > 1 ? spec_.hidden[1] : o.hidden;
    o.aux_layers = 2;
    const Mat xf = x.cast<float>();
    net_ = std::make_unique<AuxClassifier>(column_embeddings(xf, 32), 1, o, rng);
    Adapter a{*net_};
    minibatch_train(a, xf, y, spec_, rng);
    net_->prepare();
  }
  std::vector<double> predict(const FeatureMatrix& x) const override {
    const Mat p = net_->predict_proba(x.cast<float>());
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = p(i, 0);
    return out;
  }

 private:
  ClassifierSpec spec_;
  std::unique_ptr<AuxClassifier> net_;
};

}  // namespace

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec) {
  switch (spec.kind) {
    case ClassifierKind::elastic_net:
      return std::make_unique<ElasticNet>(spec);
    case ClassifierKind::decision_tree:
      return std::make_unique<Forest>(spec, false);
    case ClassifierKind::random_forest:
      return std::make_unique<Forest>(spec, true);
    case ClassifierKind::gradient_boosting:
      return std::make_unique<Boosting>(spec);
    case ClassifierKind::mlp:
      return std::make_unique<Mlp>(spec);
    case ClassifierKind::feature_selecting:
      return std::make_unique<FeatureSelecting>(spec);
  }
  throw ValidationError("unknown classifier kind");
}

std::vector<std::vector<double>> fit_predict(const ClassifierSpec& spec, const SurveySchema& schema, const Table& train,
                                             const Table& test, std::uint64_t seed) {
  if (train.rows() == 0) throw ValidationError("classifier training table is empty");
  const FeatureEncoder enc(schema, train);
  const FeatureMatrix xtr = enc.transform(train), xte = enc.transform(test);
  const auto y = static_cast<std::size_t>(schema.target_index());
  const int classes = schema.target().cardinality();
  std::vector<std::vector<double>> out(test.rows(), std::vector<double>(static_cast<std::size_t>(classes), 0.0));
  auto run = [&](int positive, std::uint64_t s) {
    std::vector<int> labels(train.rows());
    for (std::size_t r = 0; r < train.rows(); ++r) labels[r] = train.category(r, y) == positive ? 1 : 0;
    auto clf = make_classifier(spec);
    clf->fit(xtr, labels, s);
    return clf->predict(xte);
  };
  if (classes == 2) {
    const auto p = run(1, seed);
    for (std::size_t r = 0; r < test.rows(); ++r) {
      out[r][0] = 1 - p[r];
      out[r][1] = p[r];
    }
  } else {
    for (int k = 0; k < classes; ++k) {
      const auto p = run(k, derive_seed(seed, {static_cast<std::uint64_t>(k)}));
      for (std::size_t r = 0; r < test.rows(); ++r) out[r][static_cast<std::size_t>(k)] = p[r];
    }
  }
  return out;
}

}  // namespace skipgan
