#pragma once

#include <algorithm>
#include <cmath>

namespace sf2 {

// Norms below this are treated as degenerate (no direction).
inline constexpr double kNormEps = 1e-12;
// Cosines may drift outside [-1,1] by at most this much before clamping.
inline constexpr double kCosineDrift = 1e-12;

// log(1 + exp(x)) without overflow; exact max(x,0) branch keeps the large-|x|
// tails at full precision (naive form overflows already at x ~ 710).
template <class T>
T softplus(T x) {
  return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <class T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
T clamp_unit(T x) {
  return std::clamp(x, T(-1), T(1));
}

}  // namespace sf2
