#pragma once

#include "sf2/geometry.hpp"
#include "sf2/types.hpp"

namespace sf2 {

// One-vs-all classifier bank: K raw proxy vectors (row i is class i) and a
// single bias shared by every class. Rows are stored unnormalized and
// consumed through the normalized view, so weight gradients flow through the
// normalization.
class ClassifierBank {
 public:
  // i.i.d. standard-normal rows renormalized to unit length, bias 0.
  ClassifierBank(Index num_classes, Index dim, Rng& rng);
  ClassifierBank(Matrix weights, double bias);

  Index num_classes() const { return weights_.rows(); }
  Index dim() const { return weights_.cols(); }

  const Matrix& weights() const { return weights_; }
  Matrix& weights() { return weights_; }

  double bias() const { return bias_; }
  void set_bias(double b) { bias_ = b; }

  Vector normalized_weight(Index i) const;
  Matrix normalized_weights() const;

  // Every raw row must keep norm > kNormEps.
  void validate() const;

 private:
  Matrix weights_;  // K x D, raw
  double bias_ = 0.0;
};

// Per-sample cosine logits cos(theta_i), each clamped to [-1,1].
struct CosineLogits {
  Vector values;

  CosineLogits() = default;
  // Clamps entries within kCosineDrift of [-1,1]; anything farther out is a
  // computation bug, not drift.
  explicit CosineLogits(Vector v);

  Index size() const { return values.size(); }
  double operator[](Index i) const { return values[i]; }
};

// values[i] = <normalize(W_i), normalize(x)>.
CosineLogits cosine_logits(const Eigen::Ref<const Vector>& x, const ClassifierBank& bank);

}  // namespace sf2
