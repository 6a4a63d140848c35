#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sf2/types.hpp"

namespace sf2 {

enum class LossKind {
  Naive,
  Balanced,
  Curvature,
  FinalCosine,
  ArcAdditive,
  Multiplicative,
  Softmax,
};

const char* loss_kind_name(LossKind kind);
std::optional<LossKind> parse_loss_kind(const std::string& name);
std::vector<LossKind> all_loss_kinds();

struct GradCheckReport {
  LossKind kind = LossKind::Naive;
  int trials = 0;
  long long components = 0;   // gradient entries compared
  double max_rel_err = 0.0;   // relative error with a abs_tol/rel_tol denominator floor
  double rel_tol = 1e-5;
  double abs_tol = 1e-8;
  bool pass = false;
};

// Central-difference verification of every closed-form gradient (d_cos,
// d_weights, d_feature, d_bias) on seeded random instances with
// K in {2,8,32}, D in {4,16}. The finite-difference side only ever evaluates
// loss values; for the arc/multiplicative margins it differentiates the
// frozen-shift functional (the detachment contract).
GradCheckReport gradcheck_loss(LossKind kind, int trials, std::uint64_t seed,
                               double rel_tol = 1e-5, double abs_tol = 1e-8,
                               double step = 1e-6);

}  // namespace sf2
