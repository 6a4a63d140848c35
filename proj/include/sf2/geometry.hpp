#pragma once

#include "sf2/errors.hpp"
#include "sf2/numerics.hpp"
#include "sf2/types.hpp"

namespace sf2 {

// v / ||v||. Throws DegenerateVector when ||v|| <= kNormEps.
Vector l2_normalize(const Eigen::Ref<const Vector>& v);

// Uniform draw on the unit sphere S^{dim-1} (standard normal then normalize).
// Requires dim >= 2.
Vector sample_sphere_uniform(Index dim, Rng& rng);

// cos of the angle between a raw weight row and an already-unit feature,
// clamped to [-1,1]. The sharded and unsharded loss paths both go through
// this helper so their cosines agree bitwise.
double cosine_against_unit(const Eigen::Ref<const Vector>& w_raw,
                           const Eigen::Ref<const Vector>& x_unit);

// d cos / d w, scaled by an upstream factor:
//   upstream * (x_hat - cos * w_hat) / ||w||
Vector cosine_grad_weight(const Eigen::Ref<const Vector>& w_raw,
                          const Eigen::Ref<const Vector>& x_unit, double cosine,
                          double upstream);

// d cos / d x contribution of one class, scaled by an upstream factor:
//   upstream * (w_hat - cos * x_hat) / ||x||
Vector cosine_grad_feature(const Eigen::Ref<const Vector>& w_raw,
                           const Eigen::Ref<const Vector>& x_unit, double x_norm,
                           double cosine, double upstream);

}  // namespace sf2
