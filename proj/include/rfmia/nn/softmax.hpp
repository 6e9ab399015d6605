#pragma once

#include <Eigen/Dense>

namespace rfmia::nn {

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Max-subtracted softmax of a single logit vector.
template <class Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = z.maxCoeff();
  Vector<Scalar> e = (z.array() - top).exp().matrix();
  return e / e.sum();
}

// Column-wise softmax; one column per sample.
template <class Derived>
Matrix<typename Derived::Scalar> softmax_columns(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) out.col(j) = softmax(z.col(j));
  return out;
}

// Jacobian-vector product of softmax: given p = softmax(z) and an upstream
// gradient g = dF/dp, returns dF/dz = p .* (g - <g, p>).
template <class DerivedP, class DerivedG>
Vector<typename DerivedP::Scalar> softmax_backward(const Eigen::MatrixBase<DerivedP>& p,
                                                   const Eigen::MatrixBase<DerivedG>& g) {
  return (p.array() * (g.array() - g.dot(p))).matrix();
}

template <class Derived>
Eigen::Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

}  // namespace rfmia::nn
