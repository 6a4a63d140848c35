#pragma once

#include "sf2/errors.hpp"
#include "sf2/types.hpp"

namespace sf2 {

// Classic (heavyweight) momentum:  v <- momentum*v + g ; p <- p - lr*v.
// Works on any dense Eigen block of matching shape.
template <typename P, typename G, typename V>
void sgd_update(Eigen::MatrixBase<P>& param, const Eigen::MatrixBase<G>& grad,
                Eigen::MatrixBase<V>& velocity, double lr, double momentum) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
      param.rows() != velocity.rows() || param.cols() != velocity.cols())
    throw DimensionMismatch("sgd_update: shape mismatch");
  velocity = momentum * velocity.derived() + grad.derived();
  param -= lr * velocity.derived();
}

inline void sgd_update_scalar(double& param, double grad, double& velocity, double lr,
                              double momentum) {
  velocity = momentum * velocity + grad;
  param -= lr * velocity;
}

}  // namespace sf2
