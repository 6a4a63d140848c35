#include <doctest.h>

#include <cmath>

#include "sf2/classifier_bank.hpp"
#include "sf2/errors.hpp"
#include "sf2/losses.hpp"
#include "sf2/numerics.hpp"

using namespace sf2;

namespace {

CosineLogits make_cos(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return CosineLogits(v);
}

constexpr double kSoftplusMinus1 = 0.31326168751822286;

}  // namespace

TEST_CASE("loss_naive frozen values") {
  CHECK(loss_naive(make_cos({1.0}), 0) ==
        doctest::Approx(kSoftplusMinus1).epsilon(1e-14));
  CHECK(loss_naive(make_cos({0.0, 0.0}), 0) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(loss_naive(make_cos({1.0, -1.0, -1.0}), 0) ==
        doctest::Approx(3.0 * kSoftplusMinus1).epsilon(1e-14));
  CHECK_THROWS_AS(loss_naive(make_cos({0.0, 0.0}), 2), LabelOutOfRange);
}

TEST_CASE("loss_balanced weights the two sides") {
  const CosineLogits cos = make_cos({0.4, -0.3, 0.1});
  CHECK(loss_balanced(cos, 0, 1.0) == doctest::Approx(softplus(-0.4)).epsilon(1e-14));
  CHECK(loss_balanced(make_cos({0.0, 0.0}), 0, 0.5) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  // lambda = (K-1)/K, the per-term fraction
  const double lam = 2.0 / 3.0;
  CHECK(loss_balanced(cos, 0, lam) ==
        doctest::Approx(lam * softplus(-0.4) +
                        (1.0 - lam) * (softplus(-0.3) + softplus(0.1)))
            .epsilon(1e-14));
  CHECK_THROWS_AS(loss_balanced(cos, 0, 1.5), InvalidHyperparams);
}

TEST_CASE("loss_naive is twice the lambda=0.5 balanced loss") {
  const CosineLogits cos = make_cos({0.7, -0.2, 0.4, -0.9});
  CHECK(loss_naive(cos, 2) ==
        doctest::Approx(2.0 * loss_balanced(cos, 2, 0.5)).epsilon(1e-15));
}

TEST_CASE("loss_curvature reductions and limits") {
  const CosineLogits cos = make_cos({0.4, -0.3, 0.1});
  CHECK(loss_curvature(cos, 1, 0.7, 1.0) == loss_balanced(cos, 1, 0.7));  // exact

  // large r flattens easy samples to ~0
  CHECK(loss_curvature(make_cos({0.5}), 0, 1.0, 60.0) <= 1e-13);
  // hard samples keep their magnitude: (1/30)*softplus(15) ~= 0.5
  CHECK(loss_curvature(make_cos({-0.5}), 0, 1.0, 30.0) ==
        doctest::Approx(0.5 + std::log1p(std::exp(-15.0)) / 30.0).epsilon(1e-12));
  CHECK_THROWS_AS(loss_curvature(cos, 0, 0.5, 0.0), InvalidHyperparams);
}

TEST_CASE("loss_final reduces to the simpler losses") {
  const CosineLogits cos = make_cos({0.3, -0.6, 0.05, 0.9});
  const Hyperparams hp = Hyperparams::tied(0.7, 30.0, 0.0, 1.0);
  const LossGradients g = loss_final(cos, 2, hp, 0.0);
  CHECK(g.value == loss_curvature(cos, 2, 0.7, 30.0));  // bitwise
}

TEST_CASE("loss_final trivial two-class value") {
  const Hyperparams hp = Hyperparams::tied(0.5, 1.0, 0.0, 1.0);
  const LossGradients g = loss_final(make_cos({1.0, -1.0}), 0, hp, 0.0);
  CHECK(g.value == doctest::Approx(kSoftplusMinus1).epsilon(1e-14));
}

TEST_CASE("loss_final headline setting stays finite") {
  const Hyperparams hp = Hyperparams::tied(0.7, 40.0, 0.4, 3.0);
  const CosineLogits cos = make_cos({0.8, -0.2, 0.1, -0.9, 0.3});
  const LossGradients g = loss_final(cos, 0, hp, -12.0);
  CHECK(std::isfinite(g.value));
  CHECK(g.value > 0.0);
  for (Index i = 0; i < g.d_cos.size(); ++i) CHECK(std::isfinite(g.d_cos[i]));
  CHECK(std::isfinite(g.d_bias));
}

TEST_CASE("decision boundary gap is 2rm in adjusted-logit space") {
  const Hyperparams hp = Hyperparams::tied(0.7, 30.0, 0.4, 2.0);
  const detail::LossForm form = detail::final_form(hp, -5.0);
  for (double c : {-0.4, 0.0, 0.55}) {
    const double u = detail::positive_term(c, form).logit;
    const double v = detail::negative_term(c, form).logit;
    CHECK(u - v == doctest::Approx(-2.0 * 30.0 * 0.4).epsilon(1e-12));
  }
}

TEST_CASE("loss gradients stay finite over the whole cosine cube") {
  Rng rng(77);
  std::uniform_real_distribution<double> draw(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const Index k = 2 + pick(rng) * 3;
    Vector v(k);
    for (Index i = 0; i < k; ++i) v[i] = draw(rng);
    v[0] = (trial % 3 == 0) ? 1.0 : v[0];
    v[k - 1] = (trial % 4 == 0) ? -1.0 : v[k - 1];
    const CosineLogits cos(v);
    const double t = 1.0 + 2.0 * pick(rng);
    const Hyperparams hp = Hyperparams::tied(0.3 + 0.2 * pick(rng), 10.0, 0.4, t);
    const LossGradients g = loss_final(cos, 0, hp, -4.0);
    CHECK(std::isfinite(g.value));
    CHECK(g.value > 0.0);
    for (Index i = 0; i < k; ++i) CHECK(std::isfinite(g.d_cos[i]));
    CHECK(std::isfinite(g.d_bias));
  }
}

TEST_CASE("loss_variant margin-off reduces to loss_final") {
  const CosineLogits cos = make_cos({0.35, -0.1, 0.6});
  {
    const Hyperparams off = Hyperparams::tied(0.6, 20.0, 0.0, 2.0,
                                              MarginVariant::ArcAdditive);
    const Hyperparams base = Hyperparams::tied(0.6, 20.0, 0.0, 2.0);
    const LossGradients a = loss_variant(cos, 1, off, -3.0);
    const LossGradients b = loss_final(cos, 1, base, -3.0);
    CHECK(a.value == b.value);
    CHECK(a.d_cos == b.d_cos);
    CHECK(a.d_bias == b.d_bias);
  }
  {
    const Hyperparams off = Hyperparams::tied(0.6, 20.0, 1.0, 2.0,
                                              MarginVariant::Multiplicative);
    const Hyperparams base = Hyperparams::tied(0.6, 20.0, 0.0, 2.0);
    const LossGradients a = loss_variant(cos, 1, off, -3.0);
    const LossGradients b = loss_final(cos, 1, base, -3.0);
    CHECK(a.value == b.value);
    CHECK(a.d_cos == b.d_cos);
  }
}

TEST_CASE("loss_variant default margins evaluate") {
  const CosineLogits cos = make_cos({0.35, -0.1, 0.6});
  const Hyperparams arc = Hyperparams::tied(0.7, 30.0, 0.5, 3.0,
                                            MarginVariant::ArcAdditive);
  const Hyperparams mult = Hyperparams::tied(0.7, 30.0, 1.7, 3.0,
                                             MarginVariant::Multiplicative);
  CHECK(std::isfinite(loss_variant(cos, 0, arc, -10.0).value));
  CHECK(std::isfinite(loss_variant(cos, 0, mult, -10.0).value));
  // the shifted positive logit makes the loss larger than margin-off
  const Hyperparams arc_off = Hyperparams::tied(0.7, 30.0, 0.0, 3.0,
                                                MarginVariant::ArcAdditive);
  CHECK(loss_variant(cos, 0, arc, -10.0).value >
        loss_variant(cos, 0, arc_off, -10.0).value);
}

TEST_CASE("loss_variant validation") {
  const CosineLogits cos = make_cos({0.2, 0.1});
  CHECK_THROWS_AS(Hyperparams::tied(0.7, 30.0, 0.8, 1.0, MarginVariant::Multiplicative),
                  InvalidHyperparams);
  const Hyperparams cosadd = Hyperparams::tied(0.7, 30.0, 0.4, 1.0);
  CHECK_THROWS_AS(loss_variant(cos, 0, cosadd, 0.0), InvalidHyperparams);
  const Hyperparams arc = Hyperparams::tied(0.7, 30.0, 0.5, 1.0,
                                            MarginVariant::ArcAdditive);
  CHECK_THROWS_AS(loss_final(cos, 0, arc, 0.0), InvalidHyperparams);
}

TEST_CASE("variant gradients follow the detachment contract") {
  const Hyperparams hp = Hyperparams::tied(0.7, 10.0, 0.5, 2.0,
                                           MarginVariant::ArcAdditive);
  const double bias = -2.0;
  const CosineLogits cos = make_cos({0.3, 0.1, -0.2});
  const Index y = 0;
  const LossGradients g = loss_variant(cos, y, hp, bias);
  const detail::LossForm form = detail::final_form(hp, bias);
  const double shift = detail::variant_shift(cos[y], form);
  const double h = 1e-6;

  auto perturbed = [&](double delta) {
    Vector v = cos.values;
    v[y] += delta;
    return CosineLogits(v);
  };
  // frozen-shift functional matches the closed form
  const double fd_frozen =
      (detail::value_frozen_shift(perturbed(h), y, form, shift) -
       detail::value_frozen_shift(perturbed(-h), y, form, shift)) /
      (2.0 * h);
  CHECK(std::abs(g.d_cos[y] - fd_frozen) <= 1e-6 * std::max(1.0, std::abs(fd_frozen)));

  // the true functional (shift recomputed) disagrees in general
  const double fd_true = (loss_variant(perturbed(h), y, hp, bias).value -
                          loss_variant(perturbed(-h), y, hp, bias).value) /
                         (2.0 * h);
  CHECK(std::abs(fd_true - g.d_cos[y]) > 0.1 * std::abs(g.d_cos[y]));
}

TEST_CASE("loss_softmax symmetric logits give log K") {
  for (double z : {-0.5, 0.0, 0.9})
    for (double s : {4.0, 30.0})
      CHECK(loss_softmax(make_cos({z, z}), 0, s).value ==
            doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("loss_softmax hard-sample focus grows with the scale") {
  // cos(theta_i)=0.2 for the three other classes, target cosine swept
  auto value = [](double cos_y, double s) {
    return loss_softmax(make_cos({cos_y, 0.2, 0.2, 0.2}), 0, s).value;
  };
  for (double s : {4.0, 8.0, 16.0}) {
    double prev = value(-1.0, s);
    for (double c = -0.95; c <= 1.0; c += 0.05) {
      const double cur = value(c, s);
      CHECK(cur < prev);
      prev = cur;
    }
  }
  CHECK(value(-0.5, 16.0) > value(-0.5, 4.0));
}

TEST_CASE("loss_softmax margin raises the target bar") {
  const CosineLogits cos = make_cos({0.5, 0.2, 0.1});
  CHECK(loss_softmax(cos, 0, 30.0, 0.35).value > loss_softmax(cos, 0, 30.0, 0.0).value);
  CHECK_THROWS_AS(loss_softmax(cos, 3, 30.0), LabelOutOfRange);
  CHECK_THROWS_AS(loss_softmax(cos, 0, 0.0), InvalidHyperparams);
}

TEST_CASE("loss_softmax similarity-adjustment toggle has consistent gradients") {
  const CosineLogits cos = make_cos({0.4, -0.1, 0.25});
  const LossGradients g = loss_softmax(cos, 0, 16.0, 0.0, 3.0);
  const double h = 1e-6;
  for (Index i = 0; i < 3; ++i) {
    Vector up = cos.values, down = cos.values;
    up[i] += h;
    down[i] -= h;
    const double fd = (loss_softmax(CosineLogits(up), 0, 16.0, 0.0, 3.0).value -
                       loss_softmax(CosineLogits(down), 0, 16.0, 0.0, 3.0).value) /
                      (2.0 * h);
    CHECK(std::abs(g.d_cos[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("loss_ablation dispatch matches the named losses") {
  const CosineLogits cos = make_cos({0.3, -0.6, 0.05, 0.9});
  Hyperparams hp = Hyperparams::tied(0.7, 30.0, 0.4, 3.0);
  const double bias = -8.0;

  CHECK(loss_ablation(cos, 1, AblationFlags{}, hp, bias).value == loss_naive(cos, 1));
  CHECK(loss_ablation(cos, 1, AblationFlags{true, false, false, false}, hp, bias).value ==
        loss_balanced(cos, 1, 0.7));
  CHECK(loss_ablation(cos, 1, AblationFlags{true, true, false, false}, hp, bias).value ==
        loss_curvature(cos, 1, 0.7, 30.0));
  {
    // am row: margins + bias active, similarity adjustment off (t forced to 1)
    Hyperparams t1 = hp;
    t1.t = 1.0;
    CHECK(loss_ablation(cos, 1, AblationFlags{true, true, true, false}, hp, bias).value ==
          loss_final(cos, 1, t1, bias).value);
  }
  CHECK(loss_ablation(cos, 1, AblationFlags{true, true, true, true}, hp, bias).value ==
        loss_final(cos, 1, hp, bias).value);

  CHECK_THROWS_AS(loss_ablation(cos, 1, AblationFlags{true, false, true, false}, hp, bias),
                  InvalidHyperparams);
  CHECK_THROWS_AS(loss_ablation(cos, 1, AblationFlags{true, true, false, true}, hp, bias),
                  InvalidHyperparams);
}

TEST_CASE("sphereface2 weight gradients are class-decoupled, softmax's are not") {
  Rng rng(404);
  std::normal_distribution<double> normal;
  Matrix w(8, 16);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 16; ++j) w(i, j) = normal(rng);
  Vector x(16);
  for (Index j = 0; j < 16; ++j) x[j] = normal(rng);
  const Hyperparams hp = Hyperparams::tied(0.7, 30.0, 0.4, 3.0);

  auto weight_grads = [&](const Matrix& weights, bool softmax) {
    const ClassifierBank bank(weights, -10.0);
    const CosineLogits cos = cosine_logits(x, bank);
    LossGradients g = softmax ? loss_softmax(cos, 2, 30.0)
                              : loss_final(cos, 2, hp, -10.0);
    chain_through_bank(g, x, bank);
    return g.d_weights;
  };

  Matrix perturbed = w;
  perturbed(5, 3) += 0.25;  // class 5 only

  const Matrix base_sf2 = weight_grads(w, false);
  const Matrix pert_sf2 = weight_grads(perturbed, false);
  for (Index i = 0; i < 8; ++i) {
    if (i == 5) continue;
    CHECK(base_sf2.row(i) == pert_sf2.row(i));  // bitwise
  }

  const Matrix base_soft = weight_grads(w, true);
  const Matrix pert_soft = weight_grads(perturbed, true);
  bool changed = false;
  for (Index i = 0; i < 8; ++i) {
    if (i == 5) continue;
    if (base_soft.row(i) != pert_soft.row(i)) changed = true;
  }
  CHECK(changed);
}

namespace {

double bisect_bias_root(const Hyperparams& hp, Index k) {
  double lo = -200.0, hi = 200.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (bias_grad_at_zero_cos(hp, k, mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("bias_init anchor value and root property") {
  const Hyperparams hp = Hyperparams::tied(0.7, 30.0, 0.4, 1.0);
  const double b = bias_init(hp, 10);
  CHECK(b == doctest::Approx(-13.0498).epsilon(1e-4));
  CHECK(std::abs(bias_grad_at_zero_cos(hp, 10, b)) <= 1e-10);
  CHECK(std::abs(b - bisect_bias_root(hp, 10)) <= 1e-8);
}

TEST_CASE("bias_init symmetric case is zero") {
  // z = lambda/((1-lambda)(K-1)) = 1 with m=0, t=1 gives b = 0
  const Hyperparams hp = Hyperparams::tied(0.9, 25.0, 0.0, 1.0);
  CHECK(std::abs(bias_init(hp, 10)) <= 1e-9);
}

TEST_CASE("bias_init stable and direct forms agree when neither underflows") {
  const Hyperparams hp = Hyperparams::tied(0.7, 2.0, 0.1, 1.0);
  CHECK(std::abs(bias_init(hp, 10) - bias_init_direct(hp, 10)) <= 1e-10);
}

TEST_CASE("bias_init rejects degenerate settings") {
  Hyperparams hp = Hyperparams::tied(0.7, 30.0, 0.4, 1.0);
  CHECK_THROWS_AS(bias_init(hp, 1), InvalidHyperparams);
  hp.lambda = 0.0;
  CHECK_THROWS_AS(bias_init(hp, 10), InvalidHyperparams);
  hp.lambda = 1.0;
  CHECK_THROWS_AS(bias_init(hp, 10), InvalidHyperparams);
}

TEST_CASE("bias_init covers the margin variants") {
  const Hyperparams arc = Hyperparams::tied(0.7, 30.0, 0.5, 2.0,
                                            MarginVariant::ArcAdditive);
  const double b = bias_init(arc, 50);
  CHECK(std::abs(bias_grad_at_zero_cos(arc, 50, b)) <= 1e-10);
}

TEST_CASE("chain_through_bank validates shapes") {
  Rng rng(5);
  ClassifierBank bank(3, 4, rng);
  LossGradients g;
  g.d_cos = Vector::Zero(2);
  Vector x = Vector::Ones(4);
  CHECK_THROWS_AS(chain_through_bank(g, x, bank), DimensionMismatch);
  g.d_cos = Vector::Zero(3);
  Vector zero = Vector::Zero(4);
  CHECK_THROWS_AS(chain_through_bank(g, zero, bank), DegenerateVector);
}
