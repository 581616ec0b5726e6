#pragma once

#include <vector>

#include "skipgan/nn.hpp"
#include "skipgan/schema.hpp"
#include "skipgan/transform.hpp"

namespace skipgan {

using Mat = nn::Matrix<float>;

// ---------------------------------------------------------------------------
// Generator

struct OutputSpan {
  enum class Kind { tanh, softmax };
  int offset = 0;
  int width = 0;
  Kind kind = Kind::softmax;
};

/// Activation spans of the encoded layout: tanh scalar + softmax mode head
/// per continuous feature, softmax per categorical feature.
std::vector<OutputSpan> output_spans(const SurveySchema& schema, const ColumnLayout& layout);

/// Residual fully connected generator: each block appends
/// relu(bn(linear(x))) to its input; a final linear layer emits the raw
/// encoded row.
class Generator {
 public:
  Generator() = default;
  Generator(int noise_dim, int cond_dim, int data_dim, int hidden, Rng& rng);

  int noise_dim() const noexcept { return noise_dim_; }
  int cond_dim() const noexcept { return cond_dim_; }
  int data_dim() const noexcept { return data_dim_; }
  int hidden() const noexcept { return hidden_; }

  /// input = noise ⊕ cond, one row per sample. Training mode uses batch
  /// statistics; inference uses running statistics.
  Mat forward(const Mat& input, bool training);
  /// Accumulates parameter gradients from d(raw output).
  void backward(const Mat& d_raw);

  nn::ParameterList<float> parameters();
  /// Batch-norm running statistics (serialized with the weights).
  std::vector<nn::RowVector<float>*> buffers();

 private:
  int noise_dim_ = 0, cond_dim_ = 0, data_dim_ = 0, hidden_ = 0;
  nn::Linear<float> fc1_, fc2_, out_;
  nn::BatchNorm<float> bn1_, bn2_;
  nn::ReLU<float> relu1_, relu2_;
};

/// Applies span activations to raw generator output. Softmax spans use
/// Gumbel-softmax at `temperature` when `rng` is given, plain softmax
/// otherwise.
Mat activate(const Mat& raw, const std::vector<OutputSpan>& spans, float temperature, Rng* rng);
/// d(raw) from d(activated), given the activated output.
Mat activate_backward(const Mat& activated, const Mat& d_activated, const std::vector<OutputSpan>& spans,
                      float temperature);

// ---------------------------------------------------------------------------
// Critic

/// Wasserstein critic over pac-grouped samples: two leaky-ReLU + dropout
/// hidden layers and an unsquashed scalar output.
template <typename T>
class Critic {
 public:
  using Matrix = nn::Matrix<T>;

  Critic() = default;
  Critic(int sample_dim, int pac, int hidden, double dropout, Rng& rng)
      : sample_dim_(sample_dim),
        pac_(pac),
        l1_(sample_dim * pac, hidden, rng),
        l2_(hidden, hidden, rng),
        l3_(hidden, 1, rng),
        d1_(dropout),
        d2_(dropout) {}

  int sample_dim() const noexcept { return sample_dim_; }
  int pac() const noexcept { return pac_; }
  int input_dim() const noexcept { return sample_dim_ * pac_; }

  /// Reshapes n samples into n / pac groups.
  Matrix pack(const Matrix& samples) const {
    return Eigen::Map<const Matrix>(samples.data(), samples.rows() / pac_, input_dim());
  }

  /// Scores of already-packed groups (groups x 1).
  Matrix forward_packed(const Matrix& groups, Rng& rng, bool training) {
    Matrix h = d1_.forward(a1_.forward(l1_.forward(groups)), rng, training);
    h = d2_.forward(a2_.forward(l2_.forward(h)), rng, training);
    return l3_.forward(h);
  }
  Matrix forward(const Matrix& samples, Rng& rng, bool training) { return forward_packed(pack(samples), rng, training); }

  /// d(groups) from d(scores); parameter gradients accumulate when asked.
  Matrix backward_packed(const Matrix& d_scores, bool param_grads) {
    Matrix d = l3_.backward(d_scores, param_grads);
    d = l2_.backward(a2_.backward(d2_.backward(d)), param_grads);
    return l1_.backward(a1_.backward(d1_.backward(d)), param_grads);
  }
  /// As backward_packed, unpacked back to one row per sample.
  Matrix backward(const Matrix& d_scores, bool param_grads) {
    Matrix g = backward_packed(d_scores, param_grads);
    return Eigen::Map<const Matrix>(g.data(), g.rows() * pac_, sample_dim_);
  }

  /// Gradient of the critic output with respect to its packed input, for
  /// every group. Uses the masks of the last forward_packed().
  Matrix input_gradient() const {
    Matrix e2 = mask2().array().rowwise() * l3_.weight.value.col(0).transpose().array();
    Matrix e1 = (e2 * l2_.weight.value.transpose()).cwiseProduct(mask1());
    return e1 * l1_.weight.value.transpose();
  }

  /// lambda * mean_g (||d critic / d x_g|| - 1)^2 at random interpolates
  /// between packed real and fake groups. When `accumulate` is set, adds the
  /// penalty's parameter gradient (hand-derived; the leaky-ReLU and dropout
  /// masks are piecewise constant, so the input gradient is multilinear in
  /// the three weight matrices and independent of the biases).
  T gradient_penalty(const Matrix& real_groups, const Matrix& fake_groups, T lambda, Rng& rng, bool accumulate) {
    const Eigen::Index g = real_groups.rows();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix interp(g, real_groups.cols());
    for (Eigen::Index r = 0; r < g; ++r) {
      const T alpha = static_cast<T>(u(rng));
      interp.row(r) = alpha * real_groups.row(r) + (T(1) - alpha) * fake_groups.row(r);
    }
    forward_packed(interp, rng, true);
    return penalty_at_last_forward(lambda, accumulate);
  }

  /// Penalty and (optionally) its parameter gradient using the masks of the
  /// last forward_packed(); separated out for finite-difference checks.
  T penalty_at_last_forward(T lambda, bool accumulate) {
    const Matrix u2 = mask2();
    const Matrix u1 = mask1();
    const Matrix e2 = u2.array().rowwise() * l3_.weight.value.col(0).transpose().array();
    const Matrix e1 = (e2 * l2_.weight.value.transpose()).cwiseProduct(u1);
    const Matrix grad = e1 * l1_.weight.value.transpose();
    const Eigen::Index groups = grad.rows();
    T penalty = 0;
    Matrix gamma(grad.rows(), grad.cols());
    for (Eigen::Index r = 0; r < groups; ++r) {
      const T norm = grad.row(r).norm();
      penalty += (norm - T(1)) * (norm - T(1));
      const T coef = lambda * T(2) * (norm - T(1)) / (std::max(norm, T(1e-12)) * static_cast<T>(groups));
      gamma.row(r) = coef * grad.row(r);
    }
    penalty *= lambda / static_cast<T>(groups);
    if (accumulate) {
      l1_.weight.grad.noalias() += gamma.transpose() * e1;
      const Matrix dv1 = (gamma * l1_.weight.value).cwiseProduct(u1);
      l2_.weight.grad.noalias() += dv1.transpose() * e2;
      const Matrix de2 = dv1 * l2_.weight.value;
      l3_.weight.grad.col(0) += de2.cwiseProduct(u2).colwise().sum().transpose();
    }
    return penalty;
  }

  nn::ParameterList<T> parameters() {
    nn::ParameterList<T> p;
    l1_.collect(p);
    l2_.collect(p);
    l3_.collect(p);
    return p;
  }

 private:
  Matrix mask1() const { return a1_.derivative().cwiseProduct(d1_.scale()); }
  Matrix mask2() const { return a2_.derivative().cwiseProduct(d2_.scale()); }

  int sample_dim_ = 0, pac_ = 1;
  nn::Linear<T> l1_, l2_, l3_;
  nn::LeakyReLU<T> a1_{T(0.2)}, a2_{T(0.2)};
  nn::Dropout<T> d1_{0.5}, d2_{0.5};
};

// ---------------------------------------------------------------------------
// Auxiliary classifier

/// Classifier whose first-layer weights come from two auxiliary networks
/// fed with per-column embeddings: a weight predictor (tanh head, one
/// weight row per input column) and a sparsity network (sigmoid head, one
/// importance score per input column). Effective first-layer weights are
/// the predicted rows scaled by their scores.
class AuxClassifier {
 public:
  struct Options {
    int hidden = 256;
    int aux_hidden = 256;
    int aux_layers = 4;
    double sparsity_coefficient = 1e-4;
  };

  AuxClassifier() = default;
  /// `embeddings` is (input columns x embedding dim); `outputs` is 1 for a
  /// binary (sigmoid) head, K for a K-way softmax head.
  AuxClassifier(Mat embeddings, int outputs, const Options& options, Rng& rng);

  int input_dim() const noexcept { return static_cast<int>(embeddings_.rows()); }
  int outputs() const noexcept { return outputs_; }
  bool binary() const noexcept { return outputs_ == 1; }

  /// Runs the auxiliary networks; must precede forward() after any
  /// parameter update.
  void prepare();
  /// Importance scores in (0, 1), one per input column (valid after prepare()).
  const Mat& scores() const noexcept { return scores_; }
  const Mat& effective_weights() const noexcept { return effective_; }

  /// Logits (n x outputs).
  Mat forward(const Mat& x);
  /// d(x) from d(logits); with `param_grads` also accumulates trunk and
  /// first-layer gradients for backward_auxiliary().
  Mat backward(const Mat& d_logits, bool param_grads);
  /// Pushes accumulated first-layer gradients plus the sparsity penalty
  /// into the auxiliary networks.
  void backward_auxiliary();
  /// sparsity_coefficient * mean(scores).
  float sparsity_penalty() const;

  /// Class probabilities (n x outputs; sigmoid column for binary).
  Mat predict_proba(const Mat& x);

  nn::ParameterList<float> parameters();

 private:
  Options opt_;
  int outputs_ = 1;
  Mat embeddings_;
  std::vector<nn::Linear<float>> wpn_, spn_;
  std::vector<nn::ReLU<float>> wpn_act_, spn_act_;
  nn::Tanh<float> wpn_out_;
  nn::Sigmoid<float> spn_out_;
  Mat predicted_, scores_, effective_, d_effective_;
  nn::Parameter<float> b1_;
  nn::Linear<float> l2_, l3_;
  nn::ReLU<float> r1_, r2_;
  Mat input_;
};

/// Label-free column embeddings: leading right-singular directions of the
/// centered data matrix scaled by their singular values, zero-padded to
/// `dim` columns.
Mat column_embeddings(const Mat& data, int dim);

}  // namespace skipgan
