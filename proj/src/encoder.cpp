#include "sf2/encoder.hpp"

#include <cmath>

#include "sf2/errors.hpp"

namespace sf2 {

Encoder::Encoder(std::vector<Index> layer_sizes, Rng& rng)
    : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2)
    throw DimensionMismatch("Encoder: need at least input and output sizes");
  for (Index s : layer_sizes_)
    if (s < 1) throw DimensionMismatch("Encoder: layer sizes must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    const Index fan_in = layer_sizes_[l];
    const Index fan_out = layer_sizes_[l + 1];
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (Index i = 0; i < fan_out; ++i)
      for (Index j = 0; j < fan_in; ++j) w(i, j) = stddev * normal(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(fan_out));
  }
}

void Encoder::ParamGrads::setZero() {
  for (auto& w : d_weights) w.setZero();
  for (auto& b : d_biases) b.setZero();
}

Encoder::ParamGrads& Encoder::ParamGrads::operator+=(const ParamGrads& other) {
  for (std::size_t l = 0; l < d_weights.size(); ++l) {
    d_weights[l] += other.d_weights[l];
    d_biases[l] += other.d_biases[l];
  }
  return *this;
}

Encoder::ParamGrads& Encoder::ParamGrads::operator*=(double s) {
  for (auto& w : d_weights) w *= s;
  for (auto& b : d_biases) b *= s;
  return *this;
}

Vector Encoder::forward(const Eigen::Ref<const Vector>& input) const {
  Cache cache;
  return forward(input, cache);
}

Vector Encoder::forward(const Eigen::Ref<const Vector>& input, Cache& cache) const {
  if (input.size() != input_dim()) throw DimensionMismatch("Encoder::forward: input dim");
  cache.activations.clear();
  cache.preactivations.clear();
  cache.activations.push_back(input);
  Vector a = input;
  const Index last = num_layers() - 1;
  for (Index l = 0; l <= last; ++l) {
    Vector z = weights_[static_cast<std::size_t>(l)] * a +
               biases_[static_cast<std::size_t>(l)];
    cache.preactivations.push_back(z);
    a = (l == last) ? z : z.cwiseMax(0.0);
    cache.activations.push_back(a);
  }
  return a;
}

Encoder::ParamGrads Encoder::backward(const Cache& cache,
                                      const Eigen::Ref<const Vector>& d_output) const {
  if (cache.preactivations.size() != static_cast<std::size_t>(num_layers()))
    throw DimensionMismatch("Encoder::backward: stale cache");
  if (d_output.size() != output_dim())
    throw DimensionMismatch("Encoder::backward: d_output dim");
  ParamGrads grads = zero_grads();
  Vector delta = d_output;  // identity output activation
  for (Index l = num_layers() - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    grads.d_weights[lu] = delta * cache.activations[lu].transpose();
    grads.d_biases[lu] = delta;
    if (l > 0) {
      Vector back = weights_[lu].transpose() * delta;
      const Vector& z = cache.preactivations[lu - 1];
      delta = (z.array() > 0.0).select(back, 0.0);
    }
  }
  return grads;
}

Encoder::ParamGrads Encoder::zero_grads() const {
  ParamGrads g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.d_weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    g.d_biases.push_back(Vector::Zero(biases_[l].size()));
  }
  return g;
}

}  // namespace sf2
