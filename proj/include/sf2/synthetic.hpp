#pragma once

#include <string>
#include <vector>

#include "sf2/types.hpp"

namespace sf2 {

// Labeled points clustered around K class directions on the unit sphere.
// `labels` are the (possibly noise-corrupted) training labels; `true_labels`
// always hold the generating class.
struct SyntheticDataset {
  Matrix inputs;  // N x D_in, unit rows
  std::vector<Index> labels;
  std::vector<Index> true_labels;
  Matrix class_means;  // K x D_in, unit rows (empty after load_dataset)
  double noise_rate = 0.0;
  std::uint64_t seed = 0;
  Index declared_classes = 0;

  Index num_samples() const { return inputs.rows(); }
  Index input_dim() const { return inputs.cols(); }
  Index num_classes() const;
};

// Class means uniform on the sphere, samples = normalize(mean + gauss/concentration).
// Requires K >= 2, n_per_class >= 1, concentration > 0.
SyntheticDataset make_synthetic(Index num_classes, Index input_dim, Index n_per_class,
                                double concentration, std::uint64_t seed);

// Flips exactly round(rate*N) labels to a uniformly chosen wrong class.
// true_labels and inputs are untouched. rate in [0,1); needs K >= 2 when rate > 0.
SyntheticDataset inject_label_noise(const SyntheticDataset& ds, double rate,
                                    std::uint64_t seed);

// One record per line `label,true_label,x_0,...`, header
// `# K=<K> D=<D_in> noise=<rate> seed=<seed>`.
void save_dataset(const SyntheticDataset& ds, const std::string& path);
SyntheticDataset load_dataset(const std::string& path);

// Stratified per-class split; second element holds ~val_fraction of each class.
std::pair<SyntheticDataset, SyntheticDataset> split_train_val(const SyntheticDataset& ds,
                                                              double val_fraction,
                                                              std::uint64_t seed);

}  // namespace sf2
