#include "sf2/losses.hpp"

#include <cmath>
#include <numbers>

#include "sf2/errors.hpp"
#include "sf2/geometry.hpp"
#include "sf2/numerics.hpp"
#include "sf2/sim_adjust.hpp"

namespace sf2 {

void Hyperparams::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw InvalidHyperparams("Hyperparams: lambda must be in [0,1]");
  if (!(r > 0.0)) throw InvalidHyperparams("Hyperparams: r must be > 0");
  if (!(t > 0.0)) throw InvalidHyperparams("Hyperparams: t must be > 0");
  if (!(m_p >= 0.0) || !(m_n >= 0.0))
    throw InvalidHyperparams("Hyperparams: margins must be >= 0");
  if (margin_variant == MarginVariant::Multiplicative && !(m_p >= 1.0))
    throw InvalidHyperparams("Hyperparams: multiplicative margin requires m >= 1");
}

void AblationFlags::validate() const {
  if (am && !eh) throw InvalidHyperparams("AblationFlags: am requires eh");
  if (sa && !am) throw InvalidHyperparams("AblationFlags: sa requires am");
}

namespace detail {

LossForm naive_form() { return LossForm{}; }

LossForm balanced_form(double lambda) {
  LossForm f;
  f.w_pos = lambda;
  f.w_neg = 1.0 - lambda;
  return f;
}

LossForm curvature_form(double lambda, double r) {
  LossForm f;
  f.w_pos = lambda / r;
  f.w_neg = (1.0 - lambda) / r;
  f.scale = r;
  return f;
}

LossForm final_form(const Hyperparams& hp, double bias) {
  LossForm f;
  f.w_pos = hp.lambda / hp.r;
  f.w_neg = (1.0 - hp.lambda) / hp.r;
  f.scale = hp.r;
  f.bias = bias;
  f.has_bias = true;
  f.t = hp.t;
  f.variant = hp.margin_variant;
  if (hp.margin_variant == MarginVariant::CosineAdditive) {
    f.m_pos = hp.m_p;
    f.m_neg = hp.m_n;
  } else {
    f.variant_m = hp.m_p;  // negatives carry no margin for arc/multiplicative
  }
  return f;
}

double variant_shift(double cos_y, const LossForm& form) {
  if (form.variant == MarginVariant::CosineAdditive) return 0.0;
  // Clamp before arccos so the angle (and its derivative elsewhere) stays
  // away from the poles.
  const double c = std::clamp(cos_y, -1.0 + kCosineDrift, 1.0 - kCosineDrift);
  const double theta = std::acos(c);
  double shifted;
  if (form.variant == MarginVariant::ArcAdditive) {
    if (form.variant_m == 0.0) return 0.0;
    shifted = std::min(std::numbers::pi, theta + form.variant_m);
  } else {
    if (form.variant_m == 1.0) return 0.0;
    const double mult = std::min(form.variant_m, std::numbers::pi / theta);
    shifted = mult * theta;
  }
  return similarity_adjust(std::cos(shifted), form.t) - similarity_adjust(cos_y, form.t);
}

TermEval positive_term_frozen(double cos_y, double shift, const LossForm& form) {
  TermEval e;
  const double gz = similarity_adjust(cos_y, form.t);
  e.logit = form.scale * (gz - form.m_pos + shift) + form.bias;
  e.softplus_term = softplus(-e.logit);
  e.sigmoid_term = sigmoid(-e.logit);
  e.dlogit_dcos = form.scale * similarity_adjust_prime(cos_y, form.t);
  return e;
}

TermEval positive_term(double cos_y, const LossForm& form) {
  return positive_term_frozen(cos_y, variant_shift(cos_y, form), form);
}

TermEval negative_term(double cos_i, const LossForm& form) {
  TermEval e;
  const double gz = similarity_adjust(cos_i, form.t);
  e.logit = form.scale * (gz + form.m_neg) + form.bias;
  e.softplus_term = softplus(e.logit);
  e.sigmoid_term = sigmoid(e.logit);
  e.dlogit_dcos = form.scale * similarity_adjust_prime(cos_i, form.t);
  return e;
}

double value_frozen_shift(const CosineLogits& cos, Index y, const LossForm& form,
                          double shift) {
  const Index k = cos.size();
  if (y < 0 || y >= k) throw LabelOutOfRange("loss: label outside [0,K)");
  const TermEval pos = positive_term_frozen(cos[y], shift, form);
  double neg_sum = 0.0;
  for (Index i = 0; i < k; ++i) {
    if (i == y) continue;
    neg_sum += negative_term(cos[i], form).softplus_term;
  }
  return form.w_pos * pos.softplus_term + form.w_neg * neg_sum;
}

LossGradients eval_binary_family(const CosineLogits& cos, Index y, const LossForm& form) {
  const Index k = cos.size();
  if (y < 0 || y >= k) throw LabelOutOfRange("loss: label outside [0,K)");
  LossGradients g;
  g.d_cos = Vector::Zero(k);
  const TermEval pos = positive_term(cos[y], form);
  double neg_sp_sum = 0.0;
  double neg_sig_sum = 0.0;
  for (Index i = 0; i < k; ++i) {
    if (i == y) continue;
    const TermEval neg = negative_term(cos[i], form);
    neg_sp_sum += neg.softplus_term;
    neg_sig_sum += neg.sigmoid_term;
    g.d_cos[i] = form.w_neg * neg.sigmoid_term * neg.dlogit_dcos;
  }
  g.value = form.w_pos * pos.softplus_term + form.w_neg * neg_sp_sum;
  g.d_cos[y] = -form.w_pos * pos.sigmoid_term * pos.dlogit_dcos;
  g.d_bias = form.has_bias ? -form.w_pos * pos.sigmoid_term + form.w_neg * neg_sig_sum : 0.0;
  return g;
}

}  // namespace detail

double loss_naive(const CosineLogits& cos, Index y) {
  return detail::eval_binary_family(cos, y, detail::naive_form()).value;
}

double loss_balanced(const CosineLogits& cos, Index y, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw InvalidHyperparams("loss_balanced: lambda must be in [0,1]");
  return detail::eval_binary_family(cos, y, detail::balanced_form(lambda)).value;
}

double loss_curvature(const CosineLogits& cos, Index y, double lambda, double r) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw InvalidHyperparams("loss_curvature: lambda must be in [0,1]");
  if (!(r > 0.0)) throw InvalidHyperparams("loss_curvature: r must be > 0");
  return detail::eval_binary_family(cos, y, detail::curvature_form(lambda, r)).value;
}

LossGradients loss_final(const CosineLogits& cos, Index y, const Hyperparams& hp,
                         double bias) {
  hp.validate();
  if (hp.margin_variant != MarginVariant::CosineAdditive)
    throw InvalidHyperparams("loss_final: cosine-additive margins only; use loss_variant");
  return detail::eval_binary_family(cos, y, detail::final_form(hp, bias));
}

LossGradients loss_variant(const CosineLogits& cos, Index y, const Hyperparams& hp,
                           double bias) {
  hp.validate();
  if (hp.margin_variant == MarginVariant::CosineAdditive)
    throw InvalidHyperparams("loss_variant: arc-additive or multiplicative margins only");
  return detail::eval_binary_family(cos, y, detail::final_form(hp, bias));
}

LossGradients loss_sphereface2(const CosineLogits& cos, Index y, const Hyperparams& hp,
                               double bias) {
  if (hp.margin_variant == MarginVariant::CosineAdditive)
    return loss_final(cos, y, hp, bias);
  return loss_variant(cos, y, hp, bias);
}

LossGradients loss_softmax(const CosineLogits& cos, Index y, double scale, double margin,
                           double t) {
  if (!(scale > 0.0)) throw InvalidHyperparams("loss_softmax: scale must be > 0");
  const Index k = cos.size();
  if (y < 0 || y >= k) throw LabelOutOfRange("loss_softmax: label outside [0,K)");

  Vector logits(k);
  for (Index i = 0; i < k; ++i) {
    const double gz = similarity_adjust(cos[i], t);
    logits[i] = scale * (i == y ? gz - margin : gz);
  }
  const double max_logit = logits.maxCoeff();
  double z = 0.0;
  for (Index i = 0; i < k; ++i) z += std::exp(logits[i] - max_logit);

  LossGradients g;
  g.value = std::log(z) + max_logit - logits[y];
  g.d_cos = Vector::Zero(k);
  for (Index i = 0; i < k; ++i) {
    const double p = std::exp(logits[i] - max_logit) / z;
    const double indicator = (i == y) ? 1.0 : 0.0;
    g.d_cos[i] = scale * (p - indicator) * similarity_adjust_prime(cos[i], t);
  }
  g.d_bias = 0.0;
  return g;
}

LossGradients loss_ablation(const CosineLogits& cos, Index y, const AblationFlags& flags,
                            const Hyperparams& hp, double bias) {
  flags.validate();
  hp.validate();
  detail::LossForm form;
  const double r_eff = flags.eh ? hp.r : 1.0;
  form.scale = r_eff;
  form.w_pos = (flags.pn ? hp.lambda : 1.0) / r_eff;
  form.w_neg = (flags.pn ? 1.0 - hp.lambda : 1.0) / r_eff;
  form.t = flags.sa ? hp.t : 1.0;
  if (flags.am) {
    form.has_bias = true;
    form.bias = bias;
    form.variant = hp.margin_variant;
    if (hp.margin_variant == MarginVariant::CosineAdditive) {
      form.m_pos = hp.m_p;
      form.m_neg = hp.m_n;
    } else {
      form.variant_m = hp.m_p;
    }
  }
  return detail::eval_binary_family(cos, y, form);
}

namespace {

// a_y, a_i of the bias derivation: the adjusted positive/negative logits
// (without bias) when every cosine sits at 0.
void logits_at_zero_cos(const Hyperparams& hp, double& a_y, double& a_i) {
  const double g0 = 2.0 * std::pow(0.5, hp.t) - 1.0;
  if (hp.margin_variant == MarginVariant::CosineAdditive) {
    a_y = hp.r * (g0 - hp.m_p);
    a_i = hp.r * (g0 + hp.m_n);
  } else {
    detail::LossForm form = detail::final_form(hp, 0.0);
    a_y = hp.r * (g0 + detail::variant_shift(0.0, form));
    a_i = hp.r * g0;
  }
}

}  // namespace

double bias_init(const Hyperparams& hp, Index num_classes) {
  hp.validate();
  if (!(hp.lambda > 0.0 && hp.lambda < 1.0))
    throw InvalidHyperparams("bias_init: lambda must be in (0,1)");
  if (num_classes < 2) throw InvalidHyperparams("bias_init: need K >= 2");
  double a_y, a_i;
  logits_at_zero_cos(hp, a_y, a_i);
  const double z =
      hp.lambda / ((1.0 - hp.lambda) * static_cast<double>(num_classes - 1));
  const double disc = (1.0 - z) * (1.0 - z) + 4.0 * z * std::exp(a_y - a_i);
  return std::log(2.0 * z) - a_i - std::log(1.0 - z + std::sqrt(disc));
}

double bias_init_direct(const Hyperparams& hp, Index num_classes) {
  hp.validate();
  if (!(hp.lambda > 0.0 && hp.lambda < 1.0))
    throw InvalidHyperparams("bias_init_direct: lambda must be in (0,1)");
  if (num_classes < 2) throw InvalidHyperparams("bias_init_direct: need K >= 2");
  double a_y, a_i;
  logits_at_zero_cos(hp, a_y, a_i);
  const double z =
      hp.lambda / ((1.0 - hp.lambda) * static_cast<double>(num_classes - 1));
  const double disc = (1.0 - z) * (1.0 - z) + 4.0 * z * std::exp(a_y - a_i);
  return std::log(-(1.0 - z) + std::sqrt(disc)) - std::log(2.0) - a_y;
}

double bias_grad_at_zero_cos(const Hyperparams& hp, Index num_classes, double bias) {
  const CosineLogits cos(Vector::Zero(num_classes));
  return detail::eval_binary_family(cos, 0, detail::final_form(hp, bias)).d_bias;
}

void chain_through_bank(LossGradients& grads, const Eigen::Ref<const Vector>& x,
                        const ClassifierBank& bank) {
  if (grads.d_cos.size() != bank.num_classes())
    throw DimensionMismatch("chain_through_bank: d_cos size != K");
  if (x.size() != bank.dim())
    throw DimensionMismatch("chain_through_bank: feature dim mismatch");
  const double x_norm = x.norm();
  if (!(x_norm > kNormEps)) throw DegenerateVector("chain_through_bank: ||x|| <= 1e-12");
  const Vector x_unit = x / x_norm;

  const Index k = bank.num_classes();
  grads.d_weights.resize(k, bank.dim());
  grads.d_feature = Vector::Zero(bank.dim());
  for (Index i = 0; i < k; ++i) {
    const auto w_row = bank.weights().row(i).transpose();
    const double c = cosine_against_unit(w_row, x_unit);
    grads.d_weights.row(i) =
        cosine_grad_weight(w_row, x_unit, c, grads.d_cos[i]).transpose();
    grads.d_feature += cosine_grad_feature(w_row, x_unit, x_norm, c, grads.d_cos[i]);
  }
}

}  // namespace sf2
