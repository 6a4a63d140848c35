#include "sf2/geometry.hpp"

namespace sf2 {

Vector l2_normalize(const Eigen::Ref<const Vector>& v) {
  const double n = v.norm();
  if (!(n > kNormEps)) throw DegenerateVector("l2_normalize: norm <= 1e-12");
  return v / n;
}

Vector sample_sphere_uniform(Index dim, Rng& rng) {
  if (dim < 2) throw DomainError("sample_sphere_uniform: dim must be >= 2");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (;;) {
    for (Index i = 0; i < dim; ++i) v[i] = normal(rng);
    const double n = v.norm();
    if (n > kNormEps) return v / n;
    // astronomically unlikely; redraw rather than divide by ~0
  }
}

double cosine_against_unit(const Eigen::Ref<const Vector>& w_raw,
                           const Eigen::Ref<const Vector>& x_unit) {
  if (w_raw.size() != x_unit.size())
    throw DimensionMismatch("cosine_against_unit: size mismatch");
  const double n = w_raw.norm();
  if (!(n > kNormEps)) throw DegenerateVector("cosine_against_unit: weight norm <= 1e-12");
  const double c = (w_raw / n).dot(x_unit);
  return clamp_unit(c);
}

Vector cosine_grad_weight(const Eigen::Ref<const Vector>& w_raw,
                          const Eigen::Ref<const Vector>& x_unit, double cosine,
                          double upstream) {
  const double n = w_raw.norm();
  return (upstream / n) * (x_unit - cosine * (w_raw / n));
}

Vector cosine_grad_feature(const Eigen::Ref<const Vector>& w_raw,
                           const Eigen::Ref<const Vector>& x_unit, double x_norm,
                           double cosine, double upstream) {
  const double n = w_raw.norm();
  return (upstream / x_norm) * (w_raw / n - cosine * x_unit);
}

}  // namespace sf2
