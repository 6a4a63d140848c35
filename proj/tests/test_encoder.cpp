#include <doctest.h>

#include <cmath>

#include "sf2/classifier_bank.hpp"
#include "sf2/encoder.hpp"
#include "sf2/errors.hpp"
#include "sf2/losses.hpp"
#include "sf2/sgd.hpp"

using namespace sf2;

TEST_CASE("identity layer is the identity map") {
  Rng rng(1);
  Encoder enc({3, 3}, rng);
  enc.weights()[0] = Matrix::Identity(3, 3);
  enc.biases()[0].setZero();
  Vector x(3);
  x << 0.3, -1.2, 2.0;
  CHECK(enc.forward(x) == x);
}

TEST_CASE("encoder rejects bad shapes") {
  Rng rng(1);
  CHECK_THROWS_AS(Encoder({4}, rng), DimensionMismatch);
  Encoder enc({3, 2}, rng);
  Vector wrong(4);
  wrong.setOnes();
  CHECK_THROWS_AS(enc.forward(wrong), DimensionMismatch);
}

TEST_CASE("encoder backward matches finite differences through the loss head") {
  Rng rng(33);
  Encoder enc({4, 5, 3}, rng);
  ClassifierBank bank(4, 3, rng);
  const Hyperparams hp = Hyperparams::tied(0.7, 10.0, 0.2, 2.0);
  const double bias = -2.0;
  Vector x(4);
  x << 0.7, -0.4, 1.1, 0.2;
  const Index label = 2;

  auto loss_of = [&](const Encoder& model) {
    const Vector f = model.forward(x);
    return loss_final(cosine_logits(f, bank), label, hp, bias).value;
  };

  Encoder::Cache cache;
  const Vector feat = enc.forward(x, cache);
  LossGradients lg = loss_final(cosine_logits(feat, bank), label, hp, bias);
  chain_through_bank(lg, feat, bank);
  const Encoder::ParamGrads grads = enc.backward(cache, lg.d_feature);

  const double h = 1e-6;
  for (Index l = 0; l < enc.num_layers(); ++l) {
    const auto lu = static_cast<std::size_t>(l);
    for (Index i = 0; i < enc.weights()[lu].rows(); ++i) {
      for (Index j = 0; j < enc.weights()[lu].cols(); ++j) {
        Encoder up = enc, down = enc;
        up.weights()[lu](i, j) += h;
        down.weights()[lu](i, j) -= h;
        const double fd = (loss_of(up) - loss_of(down)) / (2.0 * h);
        CHECK(std::abs(grads.d_weights[lu](i, j) - fd) <=
              1e-5 * std::max(1e-3, std::abs(fd)));
      }
    }
    for (Index i = 0; i < enc.biases()[lu].size(); ++i) {
      Encoder up = enc, down = enc;
      up.biases()[lu][i] += h;
      down.biases()[lu][i] -= h;
      const double fd = (loss_of(up) - loss_of(down)) / (2.0 * h);
      CHECK(std::abs(grads.d_biases[lu][i] - fd) <= 1e-5 * std::max(1e-3, std::abs(fd)));
    }
  }
}

TEST_CASE("zero feature surfaces DegenerateVector at normalization") {
  Rng rng(2);
  Encoder enc({2, 2}, rng);
  enc.weights()[0].setZero();  // zero weights + zero bias -> zero output
  enc.biases()[0].setZero();
  ClassifierBank bank(3, 2, rng);
  Vector x(2);
  x << 0.5, -0.25;
  const Vector f = enc.forward(x);
  CHECK(f.norm() == 0.0);
  CHECK_THROWS_AS(cosine_logits(f, bank), DegenerateVector);
}

TEST_CASE("sgd momentum recursions") {
  // momentum = 0: plain gradient step
  Matrix p = Matrix::Constant(2, 2, 1.0);
  Matrix g = Matrix::Constant(2, 2, 0.5);
  Matrix v = Matrix::Zero(2, 2);
  sgd_update(p, g, v, 0.1, 0.0);
  CHECK(p(0, 0) == doctest::Approx(0.95).epsilon(1e-15));

  // two steps with constant gradient: displacement lr*g*(2 + momentum)
  const double momentum = 0.9, lr = 0.1, grad = 0.5;
  double param = 1.0, vel = 0.0;
  sgd_update_scalar(param, grad, vel, lr, momentum);
  sgd_update_scalar(param, grad, vel, lr, momentum);
  CHECK(1.0 - param == doctest::Approx(lr * grad * (2.0 + momentum)).epsilon(1e-12));

  // zero gradients forever: velocity decays geometrically, params settle
  double p2 = 1.0, v2 = 1.0;
  for (int i = 0; i < 400; ++i) sgd_update_scalar(p2, 0.0, v2, 0.01, 0.5);
  CHECK(std::abs(v2) < 1e-100);
  // closed form: total displacement = lr * v0 * mu / (1 - mu)
  CHECK(1.0 - p2 == doctest::Approx(0.01 * 0.5 / 0.5).epsilon(1e-10));

  Matrix wrong = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(sgd_update(p, wrong, v, 0.1, 0.0), DimensionMismatch);
}
