#include "sf2/gradcheck.hpp"

#include <cmath>

#include "sf2/classifier_bank.hpp"
#include "sf2/errors.hpp"
#include "sf2/losses.hpp"

namespace sf2 {

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Naive: return "naive";
    case LossKind::Balanced: return "balanced";
    case LossKind::Curvature: return "curvature";
    case LossKind::FinalCosine: return "final";
    case LossKind::ArcAdditive: return "arc";
    case LossKind::Multiplicative: return "mult";
    case LossKind::Softmax: return "softmax";
  }
  return "?";
}

std::optional<LossKind> parse_loss_kind(const std::string& name) {
  for (LossKind k : all_loss_kinds())
    if (name == loss_kind_name(k)) return k;
  return std::nullopt;
}

std::vector<LossKind> all_loss_kinds() {
  return {LossKind::Naive,       LossKind::Balanced,      LossKind::Curvature,
          LossKind::FinalCosine, LossKind::ArcAdditive,   LossKind::Multiplicative,
          LossKind::Softmax};
}

namespace {

struct Instance {
  LossKind kind;
  Matrix weights;  // K x D, raw
  Vector x;        // raw feature
  Index y = 0;
  AblationFlags flags;
  Hyperparams hp;
  double bias = 0.0;
  double softmax_scale = 30.0;
  double softmax_margin = 0.0;
  double frozen_shift = 0.0;
};

template <class T>
T pick(Rng& rng, std::initializer_list<T> values) {
  std::uniform_int_distribution<std::size_t> d(0, values.size() - 1);
  return *(values.begin() + d(rng));
}

Instance draw_instance(LossKind kind, Rng& rng) {
  Instance inst;
  inst.kind = kind;
  const Index k = pick<Index>(rng, {2, 8, 32});
  const Index d = pick<Index>(rng, {4, 16});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::uniform_real_distribution<double> bias_draw(-15.0, 5.0);

  switch (kind) {
    case LossKind::Naive:
      break;
    case LossKind::Balanced:
      inst.flags.pn = true;
      inst.hp.lambda = pick(rng, {0.3, 0.5, 0.7});
      break;
    case LossKind::Curvature:
      inst.flags.pn = inst.flags.eh = true;
      inst.hp.lambda = pick(rng, {0.3, 0.5, 0.7});
      inst.hp.r = pick(rng, {1.0, 10.0, 30.0});
      break;
    case LossKind::FinalCosine:
      inst.hp.lambda = pick(rng, {0.5, 0.7});
      inst.hp.r = pick(rng, {10.0, 30.0, 40.0});
      inst.hp.m_p = inst.hp.m_n = pick(rng, {0.0, 0.2, 0.4});
      inst.hp.t = pick(rng, {1.0, 2.0, 3.0});
      inst.bias = bias_draw(rng);
      break;
    case LossKind::ArcAdditive:
      inst.hp.margin_variant = MarginVariant::ArcAdditive;
      inst.hp.lambda = pick(rng, {0.5, 0.7});
      inst.hp.r = pick(rng, {10.0, 30.0});
      inst.hp.m_p = inst.hp.m_n = pick(rng, {0.3, 0.5});
      inst.hp.t = pick(rng, {1.0, 2.0, 3.0});
      inst.bias = bias_draw(rng);
      break;
    case LossKind::Multiplicative:
      inst.hp.margin_variant = MarginVariant::Multiplicative;
      inst.hp.lambda = pick(rng, {0.5, 0.7});
      inst.hp.r = pick(rng, {10.0, 30.0});
      inst.hp.m_p = inst.hp.m_n = pick(rng, {1.3, 1.7});
      inst.hp.t = pick(rng, {1.0, 2.0, 3.0});
      inst.bias = bias_draw(rng);
      break;
    case LossKind::Softmax:
      // scales above ~30 push the FD oracle's own noise at h=1e-6 past the
      // absolute tolerance, so the draw stops there
      inst.softmax_scale = pick(rng, {4.0, 16.0, 30.0});
      inst.softmax_margin = pick(rng, {0.0, 0.2, 0.35});
      break;
  }

  // Keep every cosine well inside (-1,1) so the +-h probes stay in domain.
  for (;;) {
    inst.weights.resize(k, d);
    for (Index i = 0; i < k; ++i) {
      const double scale = mag(rng);
      for (Index j = 0; j < d; ++j) inst.weights(i, j) = scale * normal(rng);
    }
    inst.x.resize(d);
    const double scale = mag(rng);
    for (Index j = 0; j < d; ++j) inst.x[j] = scale * normal(rng);

    const ClassifierBank bank(inst.weights, 0.0);
    const CosineLogits cos = cosine_logits(inst.x, bank);
    bool ok = true;
    for (Index i = 0; i < k; ++i)
      if (std::abs(cos[i]) > 0.99) ok = false;
    if (ok) break;
  }
  std::uniform_int_distribution<Index> label(0, k - 1);
  inst.y = label(rng);
  return inst;
}

detail::LossForm form_of(const Instance& inst) {
  switch (inst.kind) {
    case LossKind::Naive: return detail::naive_form();
    case LossKind::Balanced: return detail::balanced_form(inst.hp.lambda);
    case LossKind::Curvature: return detail::curvature_form(inst.hp.lambda, inst.hp.r);
    default: return detail::final_form(inst.hp, inst.bias);
  }
}

double value_of(const Instance& inst, const CosineLogits& cos, double bias) {
  if (inst.kind == LossKind::Softmax)
    return loss_softmax(cos, inst.y, inst.softmax_scale, inst.softmax_margin).value;
  detail::LossForm form = form_of(inst);
  form.bias = form.has_bias ? bias : 0.0;
  return detail::value_frozen_shift(cos, inst.y, form, inst.frozen_shift);
}

LossGradients grads_of(const Instance& inst, const CosineLogits& cos) {
  switch (inst.kind) {
    case LossKind::Naive:
    case LossKind::Balanced:
    case LossKind::Curvature:
      return loss_ablation(cos, inst.y, inst.flags, inst.hp, 0.0);
    case LossKind::FinalCosine:
      return loss_final(cos, inst.y, inst.hp, inst.bias);
    case LossKind::ArcAdditive:
    case LossKind::Multiplicative:
      return loss_variant(cos, inst.y, inst.hp, inst.bias);
    case LossKind::Softmax:
      return loss_softmax(cos, inst.y, inst.softmax_scale, inst.softmax_margin);
  }
  throw Error("grads_of: unreachable");
}

}  // namespace

GradCheckReport gradcheck_loss(LossKind kind, int trials, std::uint64_t seed,
                               double rel_tol, double abs_tol, double step) {
  GradCheckReport report;
  report.kind = kind;
  report.trials = trials;
  report.rel_tol = rel_tol;
  report.abs_tol = abs_tol;
  const double denom_floor = abs_tol / rel_tol;
  Rng rng(mix_seed(seed, 0x6c));

  for (int trial = 0; trial < trials; ++trial) {
    Instance inst = draw_instance(kind, rng);
    const ClassifierBank bank(inst.weights, inst.bias);
    const CosineLogits cos = cosine_logits(inst.x, bank);
    if (inst.kind == LossKind::ArcAdditive || inst.kind == LossKind::Multiplicative)
      inst.frozen_shift = detail::variant_shift(cos[inst.y], form_of(inst));

    LossGradients analytic = grads_of(inst, cos);
    chain_through_bank(analytic, inst.x, bank);

    auto record = [&](double a, double fd) {
      const double denom = std::max({std::abs(a), std::abs(fd), denom_floor});
      report.max_rel_err = std::max(report.max_rel_err, std::abs(a - fd) / denom);
      ++report.components;
    };

    // d_cos: probe the cosine-level functional directly.
    for (Index i = 0; i < cos.size(); ++i) {
      Vector up = cos.values, down = cos.values;
      up[i] += step;
      down[i] -= step;
      const double fd = (value_of(inst, CosineLogits(up), inst.bias) -
                         value_of(inst, CosineLogits(down), inst.bias)) /
                        (2.0 * step);
      record(analytic.d_cos[i], fd);
    }

    // d_weights and d_feature: recompute cosines from scratch per probe.
    auto full_value = [&](const Matrix& w, const Vector& x) {
      const ClassifierBank probe(w, inst.bias);
      return value_of(inst, cosine_logits(x, probe), inst.bias);
    };
    for (Index i = 0; i < inst.weights.rows(); ++i) {
      for (Index j = 0; j < inst.weights.cols(); ++j) {
        Matrix up = inst.weights, down = inst.weights;
        up(i, j) += step;
        down(i, j) -= step;
        const double fd =
            (full_value(up, inst.x) - full_value(down, inst.x)) / (2.0 * step);
        record(analytic.d_weights(i, j), fd);
      }
    }
    for (Index j = 0; j < inst.x.size(); ++j) {
      Vector up = inst.x, down = inst.x;
      up[j] += step;
      down[j] -= step;
      const double fd =
          (full_value(inst.weights, up) - full_value(inst.weights, down)) / (2.0 * step);
      record(analytic.d_feature[j], fd);
    }

    // d_bias (identically zero for the bias-free losses).
    {
      const double fd = (value_of(inst, cos, inst.bias + step) -
                         value_of(inst, cos, inst.bias - step)) /
                        (2.0 * step);
      record(analytic.d_bias, fd);
    }
  }

  report.pass = report.max_rel_err <= rel_tol;
  return report;
}

}  // namespace sf2
