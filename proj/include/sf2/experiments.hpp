#pragma once

#include <string>
#include <vector>

#include "sf2/eval.hpp"
#include "sf2/train.hpp"

namespace sf2 {

struct AblationRow {
  AblationFlags flags;
  std::string name;
  double accuracy = 0.0;
  double final_train_loss = 0.0;
};

// The five cumulative rows: none, PN, PN+EH, PN+EH+AM, all.
std::vector<AblationFlags> ablation_ladder();
std::string flags_name(const AblationFlags& flags);

// Trains one model per row on the identical split/seed and reports held-out
// pair accuracy. The all-false row trains the balanced loss with
// lambda = (K-1)/K (the naive weighting fails to converge).
std::vector<AblationRow> run_ablation(const SyntheticDataset& ds,
                                      const std::vector<AblationFlags>& rows,
                                      const TrainConfig& base, double val_fraction,
                                      Index n_pos, Index n_neg);

struct NoiseRow {
  std::string loss;
  double rate = 0.0;
  double accuracy = 0.0;
};

// Injects label noise into the training split at each rate, trains each
// configured loss, and evaluates on clean held-out pairs.
std::vector<NoiseRow> run_noise_sweep(
    const SyntheticDataset& clean, const std::vector<double>& rates,
    const std::vector<std::pair<std::string, LossSelection>>& losses,
    const TrainConfig& base, double val_fraction, Index n_pos, Index n_neg);

}  // namespace sf2
