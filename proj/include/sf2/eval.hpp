#pragma once

#include <vector>

#include "sf2/encoder.hpp"
#include "sf2/synthetic.hpp"
#include "sf2/types.hpp"

namespace sf2 {

struct VerificationPair {
  Index a = 0;
  Index b = 0;
  bool same = false;
};

// Sampled verification protocol: distinct sample pairs, same/different
// identity judged by true labels.
struct PairSet {
  std::vector<VerificationPair> pairs;
  Index n_pos = 0;
  Index n_neg = 0;
};

// Uniform sample of distinct positive/negative pairs (no self-pairs, no
// duplicates). Throws InsufficientData when the dataset cannot supply the
// requested counts.
PairSet build_pairs(const SyntheticDataset& ds, Index n_pos, Index n_neg,
                    std::uint64_t seed);

// Cosine of the normalized embeddings of each pair.
std::vector<double> pair_scores(const Encoder& model, const SyntheticDataset& ds,
                                const PairSet& pairs);

struct ThresholdResult {
  double threshold = 0.0;
  double accuracy = 0.0;
};

// Exhaustive sweep over midpoints of sorted unique scores (plus a
// below-minimum candidate); accept-if-above rule; ties take the smallest
// threshold.
ThresholdResult best_threshold_accuracy(const std::vector<double>& scores,
                                        const std::vector<bool>& same);

// TAR at each FAR level: threshold is the smallest value whose empirical FAR
// is <= level. Throws InsufficientData when level < 1/n_neg.
std::vector<double> tar_at_far(const std::vector<double>& scores,
                               const std::vector<bool>& same,
                               const std::vector<double>& far_levels);

// Histogram intersection of the two score sets over a shared [-1,1] binning.
double distribution_overlap(const std::vector<double>& pos_scores,
                            const std::vector<double>& neg_scores, int bins = 100);

}  // namespace sf2
