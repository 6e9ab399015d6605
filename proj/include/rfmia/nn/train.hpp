#pragma once

#include <numeric>
#include <span>
#include <vector>

#include "rfmia/nn/mlp.hpp"

namespace rfmia::nn {

// Adam state for one parameter tensor.
template <class Scalar>
struct AdamMoments {
  Matrix<Scalar> m, v;
};

template <class Scalar>
class Adam {
 public:
  explicit Adam(const TrainConfig& cfg) : cfg_(cfg) {}

  // One update of every parameter of `model`; grads are laid out like the layers.
  void step(Mlp<Scalar>& model, const std::vector<DenseLayer<Scalar>>& grads) {
    auto& layers = model.layers();
    if (w_.empty()) {
      for (const auto& l : layers) {
        w_.push_back({Matrix<Scalar>::Zero(l.weight.rows(), l.weight.cols()),
                      Matrix<Scalar>::Zero(l.weight.rows(), l.weight.cols())});
        b_.push_back({Matrix<Scalar>::Zero(l.bias.size(), 1), Matrix<Scalar>::Zero(l.bias.size(), 1)});
      }
    }
    ++t_;
    const Scalar b1 = static_cast<Scalar>(cfg_.adam_beta1);
    const Scalar b2 = static_cast<Scalar>(cfg_.adam_beta2);
    const Scalar lr = static_cast<Scalar>(cfg_.learning_rate * std::sqrt(1 - std::pow(cfg_.adam_beta2, t_)) /
                                          (1 - std::pow(cfg_.adam_beta1, t_)));
    const Scalar eps = static_cast<Scalar>(cfg_.adam_epsilon);
    const Scalar decay = static_cast<Scalar>(cfg_.learning_rate * cfg_.weight_decay);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (decay > 0) layers[l].weight *= 1 - decay;
      update(layers[l].weight, grads[l].weight, w_[l], b1, b2, lr, eps);
      update(layers[l].bias, grads[l].bias, b_[l], b1, b2, lr, eps);
    }
  }

 private:
  template <class P, class G>
  static void update(P& param, const G& grad, AdamMoments<Scalar>& s, Scalar b1, Scalar b2, Scalar lr, Scalar eps) {
    auto m = s.m.reshaped();
    auto v = s.v.reshaped();
    auto g = grad.reshaped();
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.cwiseProduct(g);
    param.reshaped().array() -= lr * m.array() / (v.array().sqrt() + eps);
  }

  TrainConfig cfg_;
  std::vector<AdamMoments<Scalar>> w_, b_;
  long t_ = 0;
};

// Mini-batch Adam on softmax cross-entropy. X holds one sample per column.
// Optional per-sample weights turn the loss into a weighted mean. Returns the
// weighted mean training loss of every epoch. The data order is reshuffled
// each epoch from cfg.seed, so a fixed (model, data, cfg) is reproducible.
template <class Scalar>
std::vector<double> train(Mlp<Scalar>& model, const Matrix<Scalar>& X, std::span<const int> labels,
                          const TrainConfig& cfg, std::span<const Scalar> sample_weights = {}) {
  cfg.validate();
  const Eigen::Index n = X.cols();
  if (n == 0) throw InvalidInput("cannot train on an empty dataset");
  if (X.rows() != model.input_dim()) throw InvalidInput("feature dimension does not match model");
  if (static_cast<Eigen::Index>(labels.size()) != n) throw InvalidInput("label count does not match samples");
  if (!sample_weights.empty() && static_cast<Eigen::Index>(sample_weights.size()) != n)
    throw InvalidInput("weight count does not match samples");
  for (int y : labels)
    if (y < 0 || y >= model.output_dim()) throw InvalidInput("label outside the model's class range");

  std::vector<double> trace;
  if (cfg.epochs == 0) return trace;

  Adam<Scalar> adam(cfg);
  Rng rng(cfg.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  auto& layers = model.layers();
  const std::size_t depth = layers.size();
  std::vector<DenseLayer<Scalar>> grads(depth);
  std::vector<Matrix<Scalar>> act(depth + 1);  // act[0] = normalized input
  std::vector<Matrix<Scalar>> pre(depth);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0, epoch_weight = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Matrix<Scalar> xb(X.rows(), b);
      Vector<Scalar> wb(b);
      for (Eigen::Index j = 0; j < b; ++j) {
        const auto idx = order[static_cast<std::size_t>(start + j)];
        xb.col(j) = X.col(idx);
        wb(j) = sample_weights.empty() ? Scalar(1) : sample_weights[static_cast<std::size_t>(idx)];
      }
      const Scalar wsum = wb.sum();
      if (!(wsum > 0)) continue;

      act[0] = ((xb.colwise() - model.input_shift()).array().colwise() * model.input_scale().array()).matrix();
      for (std::size_t l = 0; l < depth; ++l) {
        pre[l] = layers[l].weight * act[l];
        pre[l].colwise() += layers[l].bias;
        act[l + 1] = l + 1 < depth ? pre[l].cwiseMax(Scalar(0)) : softmax_columns(pre[l]);
      }

      // Fused softmax + cross-entropy gradient: (p - onehot) * w / sum(w).
      Matrix<Scalar> delta = act[depth];
      for (Eigen::Index j = 0; j < b; ++j) {
        const int y = labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + j)])];
        const Scalar p = std::max(delta(y, j), Scalar(1e-300));
        epoch_loss -= static_cast<double>(wb(j)) * std::log(static_cast<double>(p));
        delta(y, j) -= 1;
      }
      epoch_weight += static_cast<double>(wsum);
      delta = delta.array().rowwise() * (wb.transpose().array() / wsum);

      for (std::size_t l = depth; l-- > 0;) {
        grads[l].weight = delta * act[l].transpose();
        grads[l].bias = delta.rowwise().sum();
        if (l > 0) {
          delta = layers[l].weight.transpose() * delta;
          delta = delta.cwiseProduct((pre[l - 1].array() > Scalar(0)).template cast<Scalar>().matrix());
        }
      }
      adam.step(model, grads);
    }
    trace.push_back(epoch_weight > 0 ? epoch_loss / epoch_weight : 0.0);
  }
  model.set_trained(true);
  return trace;
}

// Mean softmax cross-entropy of the model on labelled samples.
template <class Scalar>
double cross_entropy(const Mlp<Scalar>& model, const Matrix<Scalar>& X, std::span<const int> labels) {
  if (X.cols() == 0) throw InvalidInput("empty sample set");
  const Matrix<Scalar> p = model.predict(X);
  double loss = 0;
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    loss -= std::log(std::max(static_cast<double>(p(labels[static_cast<std::size_t>(j)], j)), 1e-300));
  return loss / static_cast<double>(X.cols());
}

}  // namespace rfmia::nn
