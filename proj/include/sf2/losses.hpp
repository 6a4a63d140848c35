#pragma once

#include "sf2/classifier_bank.hpp"
#include "sf2/types.hpp"

namespace sf2 {

enum class MarginVariant { CosineAdditive, ArcAdditive, Multiplicative };

// The full knob set of the final loss: positive/negative balance (lambda),
// logit scale (r), margins (m_p/m_n, tied by default), similarity-adjustment
// exponent (t) and the margin flavor. For ArcAdditive m_p is an angle offset,
// for Multiplicative an angle multiplier >= 1; m_n is unused by those two.
struct Hyperparams {
  double lambda = 0.7;
  double r = 30.0;
  double m_p = 0.4;
  double m_n = 0.4;
  double t = 3.0;
  MarginVariant margin_variant = MarginVariant::CosineAdditive;

  static Hyperparams tied(double lambda, double r, double m, double t,
                          MarginVariant variant = MarginVariant::CosineAdditive) {
    Hyperparams hp;
    hp.lambda = lambda;
    hp.r = r;
    hp.m_p = m;
    hp.m_n = m;
    hp.t = t;
    hp.margin_variant = variant;
    hp.validate();
    return hp;
  }

  void validate() const;
};

// Cumulative design-principle switches: positive/negative balance, easy/hard
// scaling, angular margin + bias, similarity adjustment. am requires eh and
// sa requires am.
struct AblationFlags {
  bool pn = false;
  bool eh = false;
  bool am = false;
  bool sa = false;

  void validate() const;
};

struct LossGradients {
  double value = 0.0;
  Vector d_cos;      // dL/dcos(theta_i)
  Matrix d_weights;  // dL/dW_i (raw weights, through normalization); row i = class i
  Vector d_feature;  // dL/dx (raw feature)
  double d_bias = 0.0;
};

namespace detail {

// Term weights and per-class logit shape shared by the whole binary-loss
// family. The sharded classifier path reuses positive_term/negative_term so
// its per-class arithmetic is bitwise identical to the unsharded evaluator.
struct LossForm {
  double w_pos = 1.0;
  double w_neg = 1.0;
  double scale = 1.0;
  double m_pos = 0.0;
  double m_neg = 0.0;
  double bias = 0.0;
  bool has_bias = false;
  double t = 1.0;
  MarginVariant variant = MarginVariant::CosineAdditive;
  double variant_m = 0.0;  // arc offset / multiplicative factor
};

LossForm naive_form();
LossForm balanced_form(double lambda);
LossForm curvature_form(double lambda, double r);
LossForm final_form(const Hyperparams& hp, double bias);

struct TermEval {
  double softplus_term = 0.0;
  double sigmoid_term = 0.0;
  double dlogit_dcos = 0.0;
  double logit = 0.0;
};

// g(cos(shifted angle)) - g(cos(theta)) for the arc/multiplicative margins;
// exactly 0 for CosineAdditive and for the no-op margins (arc m=0, mult m=1).
double variant_shift(double cos_y, const LossForm& form);

TermEval positive_term(double cos_y, const LossForm& form);
TermEval positive_term_frozen(double cos_y, double shift, const LossForm& form);
TermEval negative_term(double cos_i, const LossForm& form);

// Loss value with the margin shift held constant: the detachment contract
// that SF2-A / SF2-M gradients are checked against.
double value_frozen_shift(const CosineLogits& cos, Index y, const LossForm& form,
                          double shift);

LossGradients eval_binary_family(const CosineLogits& cos, Index y, const LossForm& form);

}  // namespace detail

// log(1+exp(-cos_y)) + sum_{i!=y} log(1+exp(cos_i))
double loss_naive(const CosineLogits& cos, Index y);
// lambda * softplus(-cos_y) + (1-lambda) * sum softplus(cos_i)
double loss_balanced(const CosineLogits& cos, Index y, double lambda);
// (lambda/r) * softplus(-r cos_y) + ((1-lambda)/r) * sum softplus(r cos_i)
double loss_curvature(const CosineLogits& cos, Index y, double lambda, double r);

// Final cosine-additive loss:
//   (lambda/r)   * softplus(-(r*(g(cos_y)-m_p)+b))
// + ((1-lambda)/r) * sum softplus(r*(g(cos_i)+m_n)+b)
// d_weights/d_feature stay empty until chain_through_bank.
LossGradients loss_final(const CosineLogits& cos, Index y, const Hyperparams& hp,
                         double bias);

// Arc-additive / multiplicative margins with the shift applied in the forward
// logit only (gradient detachment); negatives carry no margin.
LossGradients loss_variant(const CosineLogits& cos, Index y, const Hyperparams& hp,
                           double bias);

// Dispatch on hp.margin_variant.
LossGradients loss_sphereface2(const CosineLogits& cos, Index y, const Hyperparams& hp,
                               double bias);

// s-normalized softmax baseline with optional additive margin on the target
// logit and an optional similarity-adjustment exponent t (1 = off).
LossGradients loss_softmax(const CosineLogits& cos, Index y, double scale,
                           double margin = 0.0, double t = 1.0);

// Cumulative-principle dispatch. The canonical rows reduce exactly:
// none -> naive, pn -> balanced, pn+eh -> curvature, pn+eh+am -> final (t=1),
// all -> final. With eh and no pn the unbalanced (1/r, 1/r) weighting is used.
LossGradients loss_ablation(const CosineLogits& cos, Index y, const AblationFlags& flags,
                            const Hyperparams& hp, double bias);

// Closed-form bias that zeroes dL/db of the final loss at cos==0 for all
// classes (numerically stable expression). Requires lambda in (0,1), K >= 2.
double bias_init(const Hyperparams& hp, Index num_classes);
// The direct quadratic-root expression; underflows to -inf for large r*m.
double bias_init_direct(const Hyperparams& hp, Index num_classes);
// dL/db of the final loss at cos==0, for verifying the init.
double bias_grad_at_zero_cos(const Hyperparams& hp, Index num_classes, double bias);

// Fills d_weights and d_feature by chaining d_cos through
//   dcos_i/dW_i = (x_hat - cos_i * w_hat_i) / ||W_i||
// and the symmetric feature rule, accumulating in class order.
void chain_through_bank(LossGradients& grads, const Eigen::Ref<const Vector>& x,
                        const ClassifierBank& bank);

}  // namespace sf2
