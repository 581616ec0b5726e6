#include "skipgan/networks.hpp"

#include <Eigen/SVD>

#include "skipgan/error.hpp"

namespace skipgan {

std::vector<OutputSpan> output_spans(const SurveySchema& schema, const ColumnLayout& layout) {
  std::vector<OutputSpan> spans;
  for (int f = 0; f < schema.num_features(); ++f) {
    const Span& s = layout.spans[static_cast<std::size_t>(f)];
    if (schema.feature(f).is_categorical()) {
      spans.push_back({s.offset, s.width, OutputSpan::Kind::softmax});
    } else {
      spans.push_back({s.offset, 1, OutputSpan::Kind::tanh});
      spans.push_back({s.offset + 1, s.width - 1, OutputSpan::Kind::softmax});
    }
  }
  return spans;
}

// ---------------------------------------------------------------------------

Generator::Generator(int noise_dim, int cond_dim, int data_dim, int hidden, Rng& rng)
    : noise_dim_(noise_dim),
      cond_dim_(cond_dim),
      data_dim_(data_dim),
      hidden_(hidden),
      fc1_(noise_dim + cond_dim, hidden, rng),
      fc2_(noise_dim + cond_dim + hidden, hidden, rng),
      out_(noise_dim + cond_dim + 2 * hidden, data_dim, rng),
      bn1_(hidden),
      bn2_(hidden) {}

Mat Generator::forward(const Mat& input, bool training) {
  const Eigen::Index n = input.rows();
  const int in = noise_dim_ + cond_dim_;
  Mat x1(n, in + hidden_);
  x1.leftCols(hidden_) = relu1_.forward(bn1_.forward(fc1_.forward(input), training));
  x1.rightCols(in) = input;
  Mat x2(n, in + 2 * hidden_);
  x2.leftCols(hidden_) = relu2_.forward(bn2_.forward(fc2_.forward(x1), training));
  x2.rightCols(in + hidden_) = x1;
  return out_.forward(x2);
}

void Generator::backward(const Mat& d_raw) {
  const int in = noise_dim_ + cond_dim_;
  Mat dx2 = out_.backward(d_raw);
  Mat dx1 = dx2.rightCols(in + hidden_);
  dx1 += fc2_.backward(bn2_.backward(relu2_.backward(dx2.leftCols(hidden_))));
  Mat dh1 = bn1_.backward(relu1_.backward(dx1.leftCols(hidden_)));
  fc1_.weight.grad.noalias() += fc1_.cached_input().transpose() * dh1;
  fc1_.bias.grad.row(0) += dh1.colwise().sum();
}

nn::ParameterList<float> Generator::parameters() {
  nn::ParameterList<float> p;
  fc1_.collect(p);
  bn1_.collect(p);
  fc2_.collect(p);
  bn2_.collect(p);
  out_.collect(p);
  return p;
}

std::vector<nn::RowVector<float>*> Generator::buffers() {
  return {&bn1_.running_mean, &bn1_.running_var, &bn2_.running_mean, &bn2_.running_var};
}

Mat activate(const Mat& raw, const std::vector<OutputSpan>& spans, float temperature, Rng* rng) {
  Mat out(raw.rows(), raw.cols());
  Mat noisy;
  if (rng) {
    // Gumbel(0, 1) noise on every softmax logit.
    noisy = raw;
    std::uniform_real_distribution<float> u(1e-10f, 1.0f);
    for (const auto& s : spans) {
      if (s.kind != OutputSpan::Kind::softmax) continue;
      for (Eigen::Index r = 0; r < raw.rows(); ++r) {
        for (int c = 0; c < s.width; ++c) noisy(r, s.offset + c) -= std::log(-std::log(u(*rng)));
      }
    }
  }
  const Mat& src = rng ? noisy : raw;
  for (const auto& s : spans) {
    if (s.kind == OutputSpan::Kind::tanh) {
      out.middleCols(s.offset, s.width) = raw.middleCols(s.offset, s.width).array().tanh().matrix();
    } else {
      nn::softmax_span<float>(src, out, s.offset, s.width, rng ? temperature : 1.0f);
    }
  }
  return out;
}

Mat activate_backward(const Mat& activated, const Mat& d_activated, const std::vector<OutputSpan>& spans,
                      float temperature) {
  Mat d(activated.rows(), activated.cols());
  for (const auto& s : spans) {
    if (s.kind == OutputSpan::Kind::tanh) {
      auto y = activated.middleCols(s.offset, s.width).array();
      d.middleCols(s.offset, s.width) = (d_activated.middleCols(s.offset, s.width).array() * (1.0f - y.square())).matrix();
    } else {
      nn::softmax_span_backward<float>(activated, d_activated, d, s.offset, s.width, temperature);
    }
  }
  return d;
}

// ---------------------------------------------------------------------------

AuxClassifier::AuxClassifier(Mat embeddings, int outputs, const Options& options, Rng& rng)
    : opt_(options), outputs_(outputs), embeddings_(std::move(embeddings)) {
  if (outputs_ < 1) throw ValidationError("classifier needs at least one output");
  const int emb = static_cast<int>(embeddings_.cols());
  // Weight predictor: aux_layers layers, the last emitting one first-layer
  // weight row (width = hidden) per input column.
  int in = emb;
  for (int l = 0; l < opt_.aux_layers; ++l) {
    const int out = (l + 1 == opt_.aux_layers) ? opt_.hidden : opt_.aux_hidden;
    wpn_.emplace_back(in, out, rng);
    in = out;
  }
  wpn_act_.resize(static_cast<std::size_t>(std::max(0, opt_.aux_layers - 1)));
  // Sparsity network: aux_layers hidden layers and a scalar sigmoid head.
  in = emb;
  for (int l = 0; l < opt_.aux_layers; ++l) {
    spn_.emplace_back(in, opt_.aux_hidden, rng);
    in = opt_.aux_hidden;
  }
  spn_.emplace_back(in, 1, rng);
  spn_act_.resize(static_cast<std::size_t>(opt_.aux_layers));

  b1_.resize(1, opt_.hidden);
  l2_ = nn::Linear<float>(opt_.hidden, opt_.hidden, rng);
  l3_ = nn::Linear<float>(opt_.hidden, outputs_, rng);
  d_effective_ = Mat::Zero(embeddings_.rows(), opt_.hidden);
}

void AuxClassifier::prepare() {
  Mat h = embeddings_;
  for (std::size_t l = 0; l < wpn_.size(); ++l) {
    h = wpn_[l].forward(h);
    h = (l + 1 < wpn_.size()) ? wpn_act_[l].forward(h) : wpn_out_.forward(h);
  }
  predicted_ = std::move(h);
  h = embeddings_;
  for (std::size_t l = 0; l < spn_.size(); ++l) {
    h = spn_[l].forward(h);
    h = (l + 1 < spn_.size()) ? spn_act_[l].forward(h) : spn_out_.forward(h);
  }
  scores_ = std::move(h);
  effective_ = predicted_.array().colwise() * scores_.col(0).array();
}

Mat AuxClassifier::forward(const Mat& x) {
  if (x.cols() != input_dim()) throw ValidationError("classifier input width mismatch");
  input_ = x;
  Mat h1 = x * effective_;
  h1.rowwise() += b1_.value.row(0);
  h1 = r1_.forward(h1);
  Mat h2 = r2_.forward(l2_.forward(h1));
  return l3_.forward(h2);
}

Mat AuxClassifier::backward(const Mat& d_logits, bool param_grads) {
  Mat d = l3_.backward(d_logits, param_grads);
  d = l2_.backward(r2_.backward(d), param_grads);
  d = r1_.backward(d);
  if (param_grads) {
    b1_.grad.row(0) += d.colwise().sum();
    d_effective_.noalias() += input_.transpose() * d;
  }
  return d * effective_.transpose();
}

void AuxClassifier::backward_auxiliary() {
  const float n = static_cast<float>(embeddings_.rows());
  Mat d_pred = d_effective_.array().colwise() * scores_.col(0).array();
  Mat d_scores = d_effective_.cwiseProduct(predicted_).rowwise().sum();
  d_scores.array() += static_cast<float>(opt_.sparsity_coefficient) / n;

  Mat d = wpn_out_.backward(d_pred);
  for (std::size_t l = wpn_.size(); l-- > 0;) {
    d = wpn_[l].backward(d);
    if (l > 0) d = wpn_act_[l - 1].backward(d);
  }
  d = spn_out_.backward(d_scores);
  for (std::size_t l = spn_.size(); l-- > 0;) {
    d = spn_[l].backward(d);
    if (l > 0) d = spn_act_[l - 1].backward(d);
  }
  d_effective_.setZero();
}

float AuxClassifier::sparsity_penalty() const {
  return static_cast<float>(opt_.sparsity_coefficient) * scores_.mean();
}

Mat AuxClassifier::predict_proba(const Mat& x) {
  Mat logits = forward(x);
  if (binary()) return nn::sigmoid<float>(logits);
  Mat p(logits.rows(), logits.cols());
  nn::softmax_span<float>(logits, p, 0, static_cast<int>(logits.cols()));
  return p;
}

nn::ParameterList<float> AuxClassifier::parameters() {
  nn::ParameterList<float> p;
  for (auto& l : wpn_) l.collect(p);
  for (auto& l : spn_) l.collect(p);
  p.push_back(&b1_);
  l2_.collect(p);
  l3_.collect(p);
  return p;
}

Mat column_embeddings(const Mat& data, int dim) {
  const Eigen::Index n = data.rows(), cols = data.cols();
  Eigen::MatrixXd centered = data.cast<double>();
  centered.rowwise() -= centered.colwise().mean();
  Mat out = Mat::Zero(cols, dim);
  if (n < 2) return out;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::Index k = std::min<Eigen::Index>(dim, svd.singularValues().size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < k; ++j) {
    // Fix the sign so the largest-magnitude loading is positive.
    Eigen::VectorXd v = svd.matrixV().col(j);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    out.col(j) = (v * svd.singularValues()(j) * scale).cast<float>();
  }
  return out;
}

}  // namespace skipgan
