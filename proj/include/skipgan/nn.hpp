#pragma once

// Minimal dense layers with hand-written backward passes. Each layer caches
// what its backward pass needs during forward(), so one forward() must be
// followed by at most one backward() before the next forward().

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "skipgan/random.hpp"

namespace skipgan::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
struct Parameter {
  Matrix<T> value;
  Matrix<T> grad;

  void resize(Eigen::Index r, Eigen::Index c) {
    value = Matrix<T>::Zero(r, c);
    grad = Matrix<T>::Zero(r, c);
  }
  void zero_grad() { grad.setZero(); }
};

template <typename T>
using ParameterList = std::vector<Parameter<T>*>;

/// y = x W + b with W stored (in x out). Initialized U(-1/sqrt(in), 1/sqrt(in)).
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, Rng& rng) {
    weight.resize(in, out);
    bias.resize(1, out);
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(double(in)), 1.0 / std::sqrt(double(in)));
    for (Eigen::Index i = 0; i < weight.value.size(); ++i) weight.value.data()[i] = static_cast<T>(u(rng));
    for (Eigen::Index i = 0; i < bias.value.size(); ++i) bias.value.data()[i] = static_cast<T>(u(rng));
  }

  int in_features() const { return static_cast<int>(weight.value.rows()); }
  int out_features() const { return static_cast<int>(weight.value.cols()); }

  Matrix<T> forward(const Matrix<T>& x) {
    input_ = x;
    return apply(x);
  }
  /// Forward without caching (inference only).
  Matrix<T> apply(const Matrix<T>& x) const {
    Matrix<T> y = x * weight.value;
    y.rowwise() += bias.value.row(0);
    return y;
  }
  Matrix<T> backward(const Matrix<T>& dy, bool param_grads = true) {
    if (param_grads) {
      weight.grad.noalias() += input_.transpose() * dy;
      bias.grad.row(0) += dy.colwise().sum();
    }
    return dy * weight.value.transpose();
  }
  const Matrix<T>& cached_input() const { return input_; }

  void collect(ParameterList<T>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }

  Parameter<T> weight;
  Parameter<T> bias;

 private:
  Matrix<T> input_;
};

template <typename T>
class ReLU {
 public:
  Matrix<T> forward(const Matrix<T>& x) {
    mask_ = (x.array() > T(0)).template cast<T>();
    return x.cwiseMax(T(0));
  }
  Matrix<T> backward(const Matrix<T>& dy) const { return dy.cwiseProduct(mask_); }

 private:
  Matrix<T> mask_;
};

template <typename T>
class LeakyReLU {
 public:
  explicit LeakyReLU(T slope = T(0.2)) : slope_(slope) {}
  Matrix<T> forward(const Matrix<T>& x) {
    deriv_ = (x.array() > T(0)).select(Matrix<T>::Ones(x.rows(), x.cols()), Matrix<T>::Constant(x.rows(), x.cols(), slope_));
    return x.cwiseProduct(deriv_);
  }
  Matrix<T> backward(const Matrix<T>& dy) const { return dy.cwiseProduct(deriv_); }
  /// Elementwise derivative of the last forward().
  const Matrix<T>& derivative() const { return deriv_; }

 private:
  T slope_;
  Matrix<T> deriv_;
};

template <typename T>
class Tanh {
 public:
  Matrix<T> forward(const Matrix<T>& x) {
    out_ = x.array().tanh().matrix();
    return out_;
  }
  Matrix<T> backward(const Matrix<T>& dy) const { return dy.cwiseProduct((T(1) - out_.array().square()).matrix()); }

 private:
  Matrix<T> out_;
};

template <typename T>
Matrix<T> sigmoid(const Matrix<T>& x) {
  return (T(1) / (T(1) + (-x.array()).exp())).matrix();
}

template <typename T>
class Sigmoid {
 public:
  Matrix<T> forward(const Matrix<T>& x) {
    out_ = sigmoid<T>(x);
    return out_;
  }
  Matrix<T> backward(const Matrix<T>& dy) const {
    return dy.cwiseProduct((out_.array() * (T(1) - out_.array())).matrix());
  }

 private:
  Matrix<T> out_;
};

/// Inverted dropout; identity when not training or p == 0.
template <typename T>
class Dropout {
 public:
  explicit Dropout(double p = 0.5) : p_(p) {}
  Matrix<T> forward(const Matrix<T>& x, Rng& rng, bool training) {
    if (!training || p_ <= 0) {
      scale_ = Matrix<T>::Ones(x.rows(), x.cols());
      return x;
    }
    std::bernoulli_distribution keep(1.0 - p_);
    scale_.resize(x.rows(), x.cols());
    const T s = static_cast<T>(1.0 / (1.0 - p_));
    for (Eigen::Index i = 0; i < scale_.size(); ++i) scale_.data()[i] = keep(rng) ? s : T(0);
    return x.cwiseProduct(scale_);
  }
  Matrix<T> backward(const Matrix<T>& dy) const { return dy.cwiseProduct(scale_); }
  const Matrix<T>& scale() const { return scale_; }

 private:
  double p_;
  Matrix<T> scale_;
};

/// Batch normalization over rows with running statistics for inference.
template <typename T>
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(int features, double momentum = 0.1, double eps = 1e-5) : momentum_(momentum), eps_(eps) {
    gamma.resize(1, features);
    gamma.value.setOnes();
    beta.resize(1, features);
    running_mean = RowVector<T>::Zero(features);
    running_var = RowVector<T>::Ones(features);
  }

  Matrix<T> forward(const Matrix<T>& x, bool training) {
    if (!training || x.rows() < 2) return apply(x);
    const T n = static_cast<T>(x.rows());
    RowVector<T> mean = x.colwise().mean();
    Matrix<T> centered = x.rowwise() - mean;
    RowVector<T> var = centered.array().square().colwise().sum().matrix() / n;
    inv_std_ = (var.array() + static_cast<T>(eps_)).rsqrt().matrix();
    xhat_ = centered.array().rowwise() * inv_std_.array();
    const T m = static_cast<T>(momentum_);
    running_mean = (T(1) - m) * running_mean + m * mean;
    running_var = (T(1) - m) * running_var + m * (var * (n / (n - T(1))));
    Matrix<T> y = xhat_.array().rowwise() * gamma.value.row(0).array();
    y.rowwise() += beta.value.row(0);
    return y;
  }
  Matrix<T> apply(const Matrix<T>& x) const {
    RowVector<T> inv = (running_var.array() + static_cast<T>(eps_)).rsqrt().matrix();
    Matrix<T> y = (x.rowwise() - running_mean).array().rowwise() * (inv.array() * gamma.value.row(0).array());
    y.rowwise() += beta.value.row(0);
    return y;
  }
  Matrix<T> backward(const Matrix<T>& dy) {
    const T n = static_cast<T>(dy.rows());
    gamma.grad.row(0) += dy.cwiseProduct(xhat_).colwise().sum();
    beta.grad.row(0) += dy.colwise().sum();
    Matrix<T> dxhat = dy.array().rowwise() * gamma.value.row(0).array();
    RowVector<T> sum_d = dxhat.colwise().sum();
    RowVector<T> sum_dx = dxhat.cwiseProduct(xhat_).colwise().sum();
    Matrix<T> dx = (dxhat * n).rowwise() - sum_d;
    dx.array() -= xhat_.array().rowwise() * sum_dx.array();
    return (dx.array().rowwise() * (inv_std_.array() / n)).matrix();
  }

  void collect(ParameterList<T>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }

  Parameter<T> gamma;
  Parameter<T> beta;
  RowVector<T> running_mean;
  RowVector<T> running_var;

 private:
  double momentum_ = 0.1;
  double eps_ = 1e-5;
  Matrix<T> xhat_;
  RowVector<T> inv_std_;
};

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
  double weight_decay = 1e-6;
};

/// Adam with L2 weight decay folded into the gradient.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(ParameterList<T> params, AdamOptions options) : params_(std::move(params)), opt_(options) {
    for (auto* p : params_) {
      m_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double b1 = opt_.beta1, b2 = opt_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const T lr = static_cast<T>(opt_.learning_rate / c1);
    const T inv_c2 = static_cast<T>(1.0 / c2);
    const T eps = static_cast<T>(opt_.eps), wd = static_cast<T>(opt_.weight_decay);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      Matrix<T> g = p.grad;
      if (opt_.weight_decay != 0) g += wd * p.value;
      m_[i] = static_cast<T>(b1) * m_[i] + static_cast<T>(1 - b1) * g;
      v_[i] = static_cast<T>(b2) * v_[i] + static_cast<T>(1 - b2) * g.cwiseProduct(g);
      p.value.array() -= lr * m_[i].array() / ((v_[i].array() * inv_c2).sqrt() + eps);
    }
  }

  long steps() const { return t_; }

 private:
  ParameterList<T> params_;
  AdamOptions opt_;
  std::vector<Matrix<T>> m_, v_;
  long t_ = 0;
};

/// Row-wise softmax over columns [offset, offset + width).
template <typename T>
void softmax_span(const Matrix<T>& logits, Matrix<T>& out, int offset, int width, T temperature = T(1)) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto src = logits.row(r).segment(offset, width);
    auto dst = out.row(r).segment(offset, width);
    const T mx = src.maxCoeff();
    dst = ((src.array() - mx) / temperature).exp().matrix();
    dst /= dst.sum();
  }
}

/// Gradient through a softmax span given its output y and temperature.
template <typename T>
void softmax_span_backward(const Matrix<T>& y, const Matrix<T>& dy, Matrix<T>& dx, int offset, int width,
                           T temperature = T(1)) {
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    auto yy = y.row(r).segment(offset, width);
    auto gg = dy.row(r).segment(offset, width);
    const T dot = yy.dot(gg);
    dx.row(r).segment(offset, width) = (yy.array() * (gg.array() - dot) / temperature).matrix();
  }
}

}  // namespace skipgan::nn
