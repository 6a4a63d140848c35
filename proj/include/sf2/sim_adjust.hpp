#pragma once

#include <cmath>

#include "sf2/errors.hpp"
#include "sf2/numerics.hpp"

namespace sf2 {

// Similarity adjustment g(z) = 2*((z+1)/2)^t - 1, a monotone increasing
// remap of cosine scores on [-1,1] with fixed endpoints g(-1)=-1, g(1)=1.
// t=1 is the exact identity; t>1 expands the empirical score range by
// pushing mid-range scores down.
inline double similarity_adjust(double z, double t) {
  if (!(t > 0.0)) throw InvalidHyperparams("similarity_adjust: t must be > 0");
  if (z < -1.0 - kCosineDrift || z > 1.0 + kCosineDrift)
    throw DomainError("similarity_adjust: z outside [-1,1]");
  if (t == 1.0) return clamp_unit(z);
  z = clamp_unit(z);
  return 2.0 * std::pow((z + 1.0) / 2.0, t) - 1.0;
}

// dg/dz = t*((z+1)/2)^(t-1). Diverges at z=-1 for t<1.
inline double similarity_adjust_prime(double z, double t) {
  if (!(t > 0.0)) throw InvalidHyperparams("similarity_adjust_prime: t must be > 0");
  if (z < -1.0 - kCosineDrift || z > 1.0 + kCosineDrift)
    throw DomainError("similarity_adjust_prime: z outside [-1,1]");
  if (t == 1.0) return 1.0;
  z = clamp_unit(z);
  if (t < 1.0 && z <= -1.0 + 1e-9)
    throw SingularDerivative("similarity_adjust_prime: derivative diverges at z=-1 for t<1");
  return t * std::pow((z + 1.0) / 2.0, t - 1.0);
}

}  // namespace sf2
