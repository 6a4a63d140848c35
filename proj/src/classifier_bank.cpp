#include "sf2/classifier_bank.hpp"

namespace sf2 {

ClassifierBank::ClassifierBank(Index num_classes, Index dim, Rng& rng) {
  if (num_classes < 1 || dim < 1)
    throw DimensionMismatch("ClassifierBank: num_classes and dim must be >= 1");
  weights_.resize(num_classes, dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < num_classes; ++i) {
    Vector row(dim);
    do {
      for (Index j = 0; j < dim; ++j) row[j] = normal(rng);
    } while (!(row.norm() > kNormEps));
    weights_.row(i) = row / row.norm();
  }
}

ClassifierBank::ClassifierBank(Matrix weights, double bias)
    : weights_(std::move(weights)), bias_(bias) {
  validate();
}

Vector ClassifierBank::normalized_weight(Index i) const {
  return l2_normalize(weights_.row(i).transpose());
}

Matrix ClassifierBank::normalized_weights() const {
  Matrix out(weights_.rows(), weights_.cols());
  for (Index i = 0; i < weights_.rows(); ++i)
    out.row(i) = normalized_weight(i).transpose();
  return out;
}

void ClassifierBank::validate() const {
  for (Index i = 0; i < weights_.rows(); ++i)
    if (!(weights_.row(i).norm() > kNormEps))
      throw DegenerateVector("ClassifierBank: weight row with norm <= 1e-12");
}

CosineLogits::CosineLogits(Vector v) {
  for (Index i = 0; i < v.size(); ++i) {
    const double z = v[i];
    if (z < -1.0 - kCosineDrift || z > 1.0 + kCosineDrift)
      throw DomainError("CosineLogits: entry outside [-1,1] beyond drift tolerance");
    v[i] = clamp_unit(z);
  }
  values = std::move(v);
}

CosineLogits cosine_logits(const Eigen::Ref<const Vector>& x, const ClassifierBank& bank) {
  if (x.size() != bank.dim()) throw DimensionMismatch("cosine_logits: feature dim mismatch");
  const Vector x_unit = l2_normalize(x);
  Vector values(bank.num_classes());
  for (Index i = 0; i < bank.num_classes(); ++i)
    values[i] = cosine_against_unit(bank.weights().row(i).transpose(), x_unit);
  return CosineLogits(std::move(values));
}

}  // namespace sf2
