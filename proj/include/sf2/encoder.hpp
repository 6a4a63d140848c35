#pragma once

#include <vector>

#include "sf2/types.hpp"

namespace sf2 {

// Small feed-forward encoder: rectifier hidden layers, identity output.
// Stands in for a CNN backbone at desk scale.
class Encoder {
 public:
  // layer_sizes = [D_in, h_1, ..., D_feat]; scaled-gaussian init.
  Encoder(std::vector<Index> layer_sizes, Rng& rng);

  Index input_dim() const { return layer_sizes_.front(); }
  Index output_dim() const { return layer_sizes_.back(); }
  Index num_layers() const { return static_cast<Index>(weights_.size()); }

  struct Cache {
    std::vector<Vector> activations;     // a_0 = input, a_l after nonlinearity
    std::vector<Vector> preactivations;  // z_l = W_l a_{l-1} + b_l
  };

  struct ParamGrads {
    std::vector<Matrix> d_weights;
    std::vector<Vector> d_biases;

    void setZero();
    ParamGrads& operator+=(const ParamGrads& other);
    ParamGrads& operator*=(double s);
  };

  Vector forward(const Eigen::Ref<const Vector>& input) const;
  Vector forward(const Eigen::Ref<const Vector>& input, Cache& cache) const;
  // d_output = dL/d(feature); returns dL/d(parameters).
  ParamGrads backward(const Cache& cache, const Eigen::Ref<const Vector>& d_output) const;

  ParamGrads zero_grads() const;

  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Vector>& biases() const { return biases_; }

 private:
  std::vector<Index> layer_sizes_;
  std::vector<Matrix> weights_;  // weights_[l]: sizes[l+1] x sizes[l]
  std::vector<Vector> biases_;
};

}  // namespace sf2
