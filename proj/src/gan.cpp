#include "skipgan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "skipgan/hash.hpp"

namespace skipgan {

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& what) {
    throw ValidationError("train config: " + field + " " + what);
  };
  if (batch_size < 1) fail("batch_size", "must be positive");
  if (pac < 1) fail("pac", "must be positive");
  if (batch_size % pac != 0) fail("batch_size", "must be divisible by pac");
  if (q < 1) fail("q", "must be >= 1");
  if (!(omega >= 0 && omega <= 1)) fail("omega", "must lie in [0, 1]");
  if (epochs < 1) fail("epochs", "must be positive");
  if (!(gp_lambda >= 0)) fail("gp_lambda", "must be nonnegative");
  if (!(adam.learning_rate > 0)) fail("learning_rate", "must be positive");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1)) fail("betas", "must lie in [0, 1)");
  if (!(adam.weight_decay >= 0)) fail("weight_decay", "must be nonnegative");
  if (noise_dim < 1) fail("noise_dim", "must be positive");
  if (generator_hidden < 1 || critic_hidden < 1) fail("hidden", "widths must be positive");
  if (!(critic_dropout >= 0 && critic_dropout < 1)) fail("critic_dropout", "must lie in [0, 1)");
  if (!(temperature > 0)) fail("temperature", "must be positive");
  if (!(importance_decay >= 0 && importance_decay < 1)) fail("importance_decay", "must lie in [0, 1)");
  if (embedding_dim < 1) fail("embedding_dim", "must be positive");
  if (classifier.hidden < 1 || classifier.aux_hidden < 1 || classifier.aux_layers < 1) {
    fail("classifier", "widths and depth must be positive");
  }
  if (!(classifier.sparsity_coefficient >= 0)) fail("classifier.sparsity_coefficient", "must be nonnegative");
}

double TrainState::epoch_mean(int epoch, double IterationRecord::*field) const {
  if (epoch < 1 || epoch > epochs_completed || iterations_per_epoch < 1) {
    throw ValidationError("epoch " + std::to_string(epoch) + " was not recorded");
  }
  const auto begin = static_cast<std::size_t>((epoch - 1) * iterations_per_epoch);
  double sum = 0;
  for (int i = 0; i < iterations_per_epoch; ++i) sum += iterations[begin + static_cast<std::size_t>(i)].*field;
  return sum / iterations_per_epoch;
}

std::size_t GanModel::train_rows() const {
  return static_cast<std::size_t>(std::accumulate(target_counts.begin(), target_counts.end(), 0));
}

namespace {

std::uint64_t checksum(nn::ParameterList<float> params, const std::vector<nn::RowVector<float>*>& buffers) {
  Fnv1a h;
  for (auto* p : params) h.update(std::as_bytes(std::span(p->value.data(), static_cast<std::size_t>(p->value.size()))));
  for (auto* b : buffers) h.update(std::as_bytes(std::span(b->data(), static_cast<std::size_t>(b->size()))));
  return h.digest();
}

}  // namespace

std::uint64_t GanModel::generator_checksum() { return checksum(generator.parameters(), generator.buffers()); }

// ---------------------------------------------------------------------------

double wasserstein_critic_loss(const Mat& real_scores, const Mat& fake_scores, Mat& d_real, Mat& d_fake) {
  const double nr = static_cast<double>(real_scores.rows()), nf = static_cast<double>(fake_scores.rows());
  d_real = Mat::Constant(real_scores.rows(), 1, static_cast<float>(-1.0 / nr));
  d_fake = Mat::Constant(fake_scores.rows(), 1, static_cast<float>(1.0 / nf));
  return static_cast<double>(fake_scores.cast<double>().mean()) - static_cast<double>(real_scores.cast<double>().mean());
}

double cond_cross_entropy(const Mat& raw, std::span<const CondVector> conds, const ColumnLayout& layout, Mat& d_raw) {
  d_raw = Mat::Zero(raw.rows(), raw.cols());
  const double n = static_cast<double>(raw.rows());
  double loss = 0;
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    for (const auto& e : conds[static_cast<std::size_t>(r)].assigned) {
      const Span& s = layout.spans[static_cast<std::size_t>(e.feature)];
      auto logits = raw.row(r).segment(s.offset, s.width);
      const double mx = logits.maxCoeff();
      double z = 0;
      for (int c = 0; c < s.width; ++c) z += std::exp(logits(c) - mx);
      const double log_z = mx + std::log(z);
      loss += log_z - logits(e.category);
      for (int c = 0; c < s.width; ++c) {
        const double p = std::exp(logits(c) - log_z);
        d_raw(r, s.offset + c) += static_cast<float>((p - (c == e.category ? 1.0 : 0.0)) / n);
      }
    }
  }
  return loss / n;
}

double classification_cross_entropy(const Mat& logits, std::span<const int> labels, Mat& d_logits) {
  const double n = static_cast<double>(logits.rows());
  d_logits.resize(logits.rows(), logits.cols());
  double loss = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (logits.cols() == 1) {
      const double x = logits(r, 0);
      // log(1 + exp(-|x|)) + max(x, 0) - x y, stable for any sign.
      loss += std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0) - x * y;
      d_logits(r, 0) = static_cast<float>((1.0 / (1.0 + std::exp(-x)) - y) / n);
    } else {
      auto row = logits.row(r);
      const double mx = row.maxCoeff();
      double z = 0;
      for (Eigen::Index c = 0; c < row.size(); ++c) z += std::exp(row(c) - mx);
      const double log_z = mx + std::log(z);
      loss += log_z - row(y);
      for (Eigen::Index c = 0; c < row.size(); ++c) {
        d_logits(r, c) = static_cast<float>((std::exp(row(c) - log_z) - (c == y ? 1.0 : 0.0)) / n);
      }
    }
  }
  return loss / n;
}

Mat drop_target(const Mat& encoded, const Span& target) {
  Mat out(encoded.rows(), encoded.cols() - target.width);
  out.leftCols(target.offset) = encoded.leftCols(target.offset);
  out.rightCols(encoded.cols() - target.end()) = encoded.rightCols(encoded.cols() - target.end());
  return out;
}

Mat restore_target(const Mat& reduced, const Span& target) {
  Mat out = Mat::Zero(reduced.rows(), reduced.cols() + target.width);
  out.leftCols(target.offset) = reduced.leftCols(target.offset);
  out.rightCols(out.cols() - target.end()) = reduced.rightCols(out.cols() - target.end());
  return out;
}

std::vector<int> reduced_column_features(const ColumnLayout& layout, int target) {
  std::vector<int> out;
  for (std::size_t f = 0; f < layout.spans.size(); ++f) {
    if (static_cast<int>(f) == target) continue;
    for (int c = 0; c < layout.spans[f].width; ++c) out.push_back(static_cast<int>(f));
  }
  return out;
}

Mat dense_conds(std::span<const CondVector> conds, const CondLayout& layout) {
  Mat out = Mat::Zero(static_cast<Eigen::Index>(conds.size()), layout.width);
  for (std::size_t i = 0; i < conds.size(); ++i) {
    for (const auto& e : conds[i].assigned) out(static_cast<Eigen::Index>(i), layout.slot(e.feature, e.category)) = 1.0f;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Mat hcat(const Mat& a, const Mat& b) {
  Mat out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

Mat vcat(const Mat& a, const Mat& b) {
  Mat out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

Mat gather_rows(const Mat& m, std::span<const std::size_t> rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Mat gaussian_noise(Eigen::Index rows, int cols, Rng& rng) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Mat z(rows, cols);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  return z;
}

bool finite(const IterationRecord& r) {
  return std::isfinite(r.critic) && std::isfinite(r.generator_orig) && std::isfinite(r.generator_dstream) &&
         std::isfinite(r.classifier);
}

class Trainer {
 public:
  Trainer(const SurveySchema& schema, const Table& table, const TrainConfig& config)
      : schema_(schema), cfg_(config), rng_(derive_seed(config.seed, {0})) {
    cfg_.validate();
    if (table.rows() < static_cast<std::size_t>(cfg_.batch_size)) {
      throw ValidationError("training table has " + std::to_string(table.rows()) + " rows, fewer than one batch of " +
                            std::to_string(cfg_.batch_size));
    }
    validate_table(schema, table);
    transformer_ = DataTransformer::fit(schema, table);
    const EncodedTable enc = transformer_.encode(table);
    data_ = enc.data.cast<float>();
    layout_ = enc.layout;
    spans_ = output_spans(schema, layout_);
    cond_layout_ = make_cond_layout(schema);
    freq_ = CategoryFrequencyTable(schema, table);
    importance_ = ImportanceDistribution(schema);
    index_ = ConditionIndex(schema, table);
    target_ = schema.target_index();
    target_span_ = layout_.spans[static_cast<std::size_t>(target_)];
    for (std::size_t r = 0; r < table.rows(); ++r) labels_.push_back(table.category(r, static_cast<std::size_t>(target_)));
    counts_.assign(static_cast<std::size_t>(schema.target().cardinality()), 0);
    for (int y : labels_) ++counts_[static_cast<std::size_t>(y)];
    column_features_ = reduced_column_features(layout_, target_);

    Rng init(derive_seed(cfg_.seed, {1}));
    const int data_dim = layout_.total_width;
    generator_ = Generator(cfg_.noise_dim, cond_layout_.width, data_dim, cfg_.generator_hidden, init);
    critic_ = Critic<float>(data_dim + cond_layout_.width, cfg_.pac, cfg_.critic_hidden, cfg_.critic_dropout, init);
    const int outputs = schema.target().cardinality() == 2 ? 1 : schema.target().cardinality();
    classifier_ = AuxClassifier(column_embeddings(drop_target(data_, target_span_), cfg_.embedding_dim), outputs,
                                cfg_.classifier, init);
    classifier_.prepare();
    g_opt_ = nn::Adam<float>(generator_.parameters(), cfg_.adam);
    d_opt_ = nn::Adam<float>(critic_.parameters(), cfg_.adam);
    c_opt_ = nn::Adam<float>(classifier_.parameters(), cfg_.adam);
  }

  GanModel run(const std::function<void(const EpochReport&)>& on_epoch) {
    const int iters = static_cast<int>(data_.rows()) / cfg_.batch_size;
    state_.iterations_per_epoch = iters;
    state_.importance_features = importance_.features();
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      match_hits_ = match_total_ = 0;
      assigned_sum_ = assigned_count_ = 0;
      for (int it = 0; it < iters; ++it) {
        IterationRecord rec = iteration();
        state_.iterations.push_back(rec);
        if (!finite(rec)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", iteration " << it + 1 << " (critic " << rec.critic
              << ", generator " << rec.generator_orig << ", downstream " << rec.generator_dstream << ", classifier "
              << rec.classifier << ")";
          snapshot();
          throw TrainingDiverged(msg.str(), state_);
        }
      }
      state_.epochs_completed = epoch;
      state_.condition_match.push_back(match_total_ ? static_cast<double>(match_hits_) / match_total_ : 0.0);
      state_.mean_assigned.push_back(assigned_count_ ? assigned_sum_ / assigned_count_ : 0.0);
      snapshot();
      if (on_epoch) on_epoch(EpochReport{epoch, &state_});
    }
    GanModel model;
    model.schema = schema_;
    model.transformer = transformer_;
    model.cond_layout = cond_layout_;
    model.config = cfg_;
    model.state = state_;
    model.generator = generator_;
    model.target_counts = counts_;
    return model;
  }

 private:
  std::vector<CondVector> sample_conds() {
    auto conds = sample_cond_batch(schema_, freq_, importance_, cfg_.batch_size, cfg_.omega, rng_, cfg_.enforce);
    std::shuffle(conds.begin(), conds.end(), rng_);
    return conds;
  }

  Mat generate(const Mat& cond, Mat& activated) {
    Mat z = gaussian_noise(cond.rows(), cfg_.noise_dim, rng_);
    Mat raw = generator_.forward(hcat(z, cond), true);
    activated = activate(raw, spans_, static_cast<float>(cfg_.temperature), &rng_);
    return raw;
  }

  IterationRecord iteration() {
    IterationRecord rec;
    const auto tau = static_cast<float>(cfg_.temperature);
    const int data_dim = layout_.total_width;

    // Critic step.
    const auto conds = sample_conds();
    const auto rows = match_rows(index_, conds, rng_);
    const Mat cond = dense_conds(conds, cond_layout_);
    const Mat real_rows = gather_rows(data_, rows);
    Mat fake_act;
    generate(cond, fake_act);
    const Mat real_groups = critic_.pack(hcat(real_rows, cond));
    const Mat fake_groups = critic_.pack(hcat(fake_act, cond));
    const Eigen::Index groups = real_groups.rows();
    d_opt_.zero_grad();
    const Mat scores = critic_.forward_packed(vcat(real_groups, fake_groups), rng_, true);
    Mat d_real, d_fake;
    const double w = wasserstein_critic_loss(scores.topRows(groups), scores.bottomRows(groups), d_real, d_fake);
    critic_.backward_packed(vcat(d_real, d_fake), true);
    const double gp = critic_.gradient_penalty(real_groups, fake_groups, static_cast<float>(cfg_.gp_lambda), rng_, true);
    d_opt_.step();
    rec.critic = w + gp;

    // Generator step on q oversampled condition batches.
    g_opt_.zero_grad();
    std::vector<CondVector> y_conds;
    for (int s = 0; s < cfg_.q; ++s) {
      const auto gconds = sample_conds();
      const Mat gcond = dense_conds(gconds, cond_layout_);
      Mat act;
      const Mat raw = generate(gcond, act);
      const Mat gscores = critic_.forward(hcat(act, gcond), rng_, true);
      const Mat d_scores = Mat::Constant(gscores.rows(), 1, -1.0f / static_cast<float>(gscores.rows()));
      const Mat d_in = critic_.backward(d_scores, false);
      Mat d_ce;
      const double ce = cond_cross_entropy(raw, gconds, layout_, d_ce);
      Mat d_raw = activate_backward(act, d_in.leftCols(data_dim), spans_, tau) + d_ce;
      d_raw /= static_cast<float>(cfg_.q);
      generator_.backward(d_raw);
      rec.generator_orig += (-static_cast<double>(gscores.cast<double>().mean()) + ce) / cfg_.q;
      for (std::size_t i = 0; i < gconds.size(); ++i) {
        const auto& c = gconds[i];
        const Span& sp = layout_.spans[static_cast<std::size_t>(c.feature)];
        Eigen::Index k = 0;
        act.row(static_cast<Eigen::Index>(i)).segment(sp.offset, sp.width).maxCoeff(&k);
        match_hits_ += (k == c.category);
        ++match_total_;
        if (c.feature == target_) {
          y_conds.push_back(c);
        } else {
          assigned_sum_ += static_cast<double>(c.assigned.size());
          ++assigned_count_;
        }
      }
    }
    g_opt_.step();

    // Generator step on the downstream loss of the target-conditioned fakes.
    if (!y_conds.empty()) {
      g_opt_.zero_grad();
      const Mat ycond = dense_conds(y_conds, cond_layout_);
      Mat act;
      generate(ycond, act);
      std::vector<int> classes;
      for (const auto& c : y_conds) classes.push_back(c.category);
      const Mat logits = classifier_.forward(drop_target(act, target_span_));
      Mat d_logits;
      rec.generator_dstream = classification_cross_entropy(logits, classes, d_logits);
      const Mat d_act = restore_target(classifier_.backward(d_logits, false), target_span_);
      generator_.backward(activate_backward(act, d_act, spans_, tau));
      g_opt_.step();
    } else if (!warned_empty_) {
      std::cerr << "skipgan: warning: no target-conditioned fakes; downstream loss is 0\n";
      warned_empty_ = true;
    }

    // Classifier step on the real batch, then the importance update.
    c_opt_.zero_grad();
    std::vector<int> labels;
    for (auto r : rows) labels.push_back(labels_[r]);
    const Mat logits = classifier_.forward(drop_target(real_rows, target_span_));
    Mat d_logits;
    rec.classifier = classification_cross_entropy(logits, labels, d_logits) + classifier_.sparsity_penalty();
    classifier_.backward(d_logits, true);
    classifier_.backward_auxiliary();
    c_opt_.step();
    classifier_.prepare();
    const Mat& s = classifier_.scores();
    std::vector<double> col_scores(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index i = 0; i < s.rows(); ++i) col_scores[static_cast<std::size_t>(i)] = s(i, 0);
    importance_ = update_importance(importance_, col_scores, column_features_, cfg_.importance_decay);
    return rec;
  }

  void snapshot() {
    state_.importance = importance_.probabilities();
    state_.parameter_checksum = checksum(generator_.parameters(), generator_.buffers());
  }

  SurveySchema schema_;
  TrainConfig cfg_;
  Rng rng_;
  DataTransformer transformer_;
  Mat data_;
  ColumnLayout layout_;
  std::vector<OutputSpan> spans_;
  CondLayout cond_layout_;
  CategoryFrequencyTable freq_;
  ImportanceDistribution importance_;
  ConditionIndex index_;
  int target_ = 0;
  Span target_span_;
  std::vector<int> labels_;
  std::vector<int> counts_;
  std::vector<int> column_features_;
  Generator generator_;
  Critic<float> critic_;
  AuxClassifier classifier_;
  nn::Adam<float> g_opt_, d_opt_, c_opt_;
  TrainState state_;
  long match_hits_ = 0, match_total_ = 0;
  double assigned_sum_ = 0, assigned_count_ = 0;
  bool warned_empty_ = false;
};

}  // namespace

GanModel train(const SurveySchema& schema, const Table& train_table, const TrainConfig& config,
               const std::function<void(const EpochReport&)>& on_epoch) {
  Trainer trainer(schema, train_table, config);
  return trainer.run(on_epoch);
}

Mat sample_generator(GanModel& model, std::span<const CondVector> conds, Rng& rng) {
  const Mat cond = dense_conds(conds, model.cond_layout);
  const Mat z = gaussian_noise(cond.rows(), model.generator.noise_dim(), rng);
  const Mat raw = model.generator.forward(hcat(z, cond), false);
  return activate(raw, output_spans(model.schema, model.transformer.layout()), static_cast<float>(model.config.temperature),
                  &rng);
}

}  // namespace skipgan
