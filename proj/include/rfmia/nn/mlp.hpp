#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfmia/errors.hpp"
#include "rfmia/nn/softmax.hpp"
#include "rfmia/rng.hpp"

namespace rfmia::nn {

// Fully connected ReLU stack with a softmax head.
struct LayerSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int output_dim = 0;

  // input, hidden..., output
  std::vector<int> dims() const {
    std::vector<int> d{input_dim};
    d.insert(d.end(), hidden_dims.begin(), hidden_dims.end());
    d.push_back(output_dim);
    return d;
  }

  void validate() const {
    for (int d : dims())
      if (d < 1) throw InvalidInput("layer dimensions must be >= 1");
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Decoupled (AdamW-style) decay of weight matrices; biases are not decayed.
  double weight_decay = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 0) throw InvalidInput("epochs must be >= 0");
    if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
    if (!(learning_rate > 0)) throw InvalidInput("learning_rate must be > 0");
    if (!(adam_beta1 > 0 && adam_beta1 < 1) || !(adam_beta2 > 0 && adam_beta2 < 1))
      throw InvalidInput("adam betas must lie in (0, 1)");
    if (!(adam_epsilon > 0)) throw InvalidInput("adam_epsilon must be > 0");
    if (!(weight_decay >= 0)) throw InvalidInput("weight_decay must be >= 0");
  }
};

// Scalar function of the network output that input_gradient differentiates.
struct Readout {
  enum class Kind {
    Logit,              // pre-softmax output component
    Probability,        // softmax output component
    DistanceFromHalf,   // |probability - 0.5|, subgradient 0 at the kink
  };
  Kind kind = Kind::Probability;
  Eigen::Index component = 0;

  static Readout logit(Eigen::Index c) { return {Kind::Logit, c}; }
  static Readout probability(Eigen::Index c) { return {Kind::Probability, c}; }
  static Readout distance_from_half(Eigen::Index c) { return {Kind::DistanceFromHalf, c}; }
};

template <class Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;    // out
};

// Feedforward classifier. Inputs are affinely normalized, (x - shift) .* scale,
// before the first layer; the normalization is identity unless fitted.
// Batches are passed column-wise: one sample per column.
template <class Scalar>
class Mlp {
 public:
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;

  Mlp() = default;

  // Kaiming-uniform weights, zero biases.
  static Mlp init(const LayerSpec& spec, std::uint64_t seed) {
    Mlp m = zeros(spec);
    Rng rng(seed);
    for (auto& layer : m.layers_) {
      const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
          layer.weight(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
    return m;
  }

  static Mlp zeros(const LayerSpec& spec) {
    spec.validate();
    Mlp m;
    m.spec_ = spec;
    const auto d = spec.dims();
    for (std::size_t l = 1; l < d.size(); ++l)
      m.layers_.push_back({Mat::Zero(d[l], d[l - 1]), Vec::Zero(d[l])});
    m.shift_ = Vec::Zero(spec.input_dim);
    m.scale_ = Vec::Ones(spec.input_dim);
    return m;
  }

  const LayerSpec& spec() const { return spec_; }
  Eigen::Index input_dim() const { return spec_.input_dim; }
  Eigen::Index output_dim() const { return spec_.output_dim; }

  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }
  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }

  const Vec& input_shift() const { return shift_; }
  const Vec& input_scale() const { return scale_; }
  void set_input_normalization(Vec shift, Vec scale) {
    if (shift.size() != input_dim() || scale.size() != input_dim())
      throw InvalidInput("normalization size does not match input_dim");
    shift_ = std::move(shift);
    scale_ = std::move(scale);
  }

  // Standardizes each input feature over the columns of X; constant
  // features keep unit scale.
  void fit_input_normalization(const Mat& X) {
    check_dim(X.rows());
    if (X.cols() == 0) throw InvalidInput("cannot fit normalization on zero samples");
    Vec mean = X.rowwise().mean();
    Vec scale(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const Scalar sd = std::sqrt((X.row(i).array() - mean(i)).square().mean());
      scale(i) = sd > Scalar(1e-12) ? Scalar(1) / sd : Scalar(1);
    }
    shift_ = std::move(mean);
    scale_ = std::move(scale);
  }

  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  Mat logits(const Eigen::Ref<const Mat>& X) const {
    check_dim(X.rows());
    Mat a = normalize(X);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Mat z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      if (l + 1 < layers_.size()) z = z.cwiseMax(Scalar(0));
      a = std::move(z);
    }
    return a;
  }

  // Class probabilities, one column per sample.
  Mat predict(const Eigen::Ref<const Mat>& X) const { return softmax_columns(logits(X)); }

  Vec predict_scores(const Eigen::Ref<const Vec>& x) const {
    return softmax(logits(x).col(0));
  }

  // Gradient of a scalar readout of the output with respect to the raw
  // (un-normalized) input. ReLU'(0) is taken as 0.
  Vec input_gradient(const Eigen::Ref<const Vec>& x, Readout readout) const {
    check_dim(x.size());
    if (readout.component < 0 || readout.component >= output_dim())
      throw InvalidInput("readout component out of range");

    std::vector<Vec> pre;  // pre-activations of hidden layers
    Vec a = normalize(x);
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      Vec z = layers_[l].weight * a + layers_[l].bias;
      a = z.cwiseMax(Scalar(0));
      pre.push_back(std::move(z));
    }
    const Vec out = layers_.back().weight * a + layers_.back().bias;

    Vec grad = Vec::Zero(out.size());
    const auto c = readout.component;
    switch (readout.kind) {
      case Readout::Kind::Logit:
        grad(c) = 1;
        break;
      case Readout::Kind::Probability: {
        const Vec p = softmax(out);
        Vec g = Vec::Zero(out.size());
        g(c) = 1;
        grad = softmax_backward(p, g);
        break;
      }
      case Readout::Kind::DistanceFromHalf: {
        const Vec p = softmax(out);
        Vec g = Vec::Zero(out.size());
        g(c) = p(c) > Scalar(0.5) ? Scalar(1) : (p(c) < Scalar(0.5) ? Scalar(-1) : Scalar(0));
        grad = softmax_backward(p, g);
        break;
      }
    }

    for (std::size_t l = layers_.size(); l-- > 0;) {
      grad = layers_[l].weight.transpose() * grad;
      if (l > 0) grad = grad.cwiseProduct((pre[l - 1].array() > Scalar(0)).template cast<Scalar>().matrix());
    }
    return grad.cwiseProduct(scale_);
  }

 private:
  void check_dim(Eigen::Index d) const {
    if (d != input_dim())
      throw InvalidInput("input has " + std::to_string(d) + " features, model expects " +
                         std::to_string(input_dim()));
  }

  Mat normalize(const Eigen::Ref<const Mat>& X) const {
    return ((X.colwise() - shift_).array().colwise() * scale_.array()).matrix();
  }

  LayerSpec spec_;
  std::vector<DenseLayer<Scalar>> layers_;
  Vec shift_;
  Vec scale_;
  bool trained_ = false;
};

using MlpModel = Mlp<double>;

}  // namespace rfmia::nn
