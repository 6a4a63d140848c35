#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sf2/classifier_bank.hpp"
#include "sf2/encoder.hpp"
#include "sf2/eval.hpp"
#include "sf2/losses.hpp"
#include "sf2/synthetic.hpp"

namespace sf2 {

enum class LossFamily { SphereFace2, Softmax };

struct LossSelection {
  LossFamily family = LossFamily::SphereFace2;
  AblationFlags flags{true, true, true, true};
  Hyperparams hp;
  double softmax_scale = 30.0;
  double softmax_margin = 0.0;
  double softmax_t = 1.0;  // similarity-adjustment toggle on the baseline
};

enum class BiasInitMode { ClosedForm, Zero };

struct TrainConfig {
  double lr = 0.05;
  double momentum = 0.9;
  Index epochs = 30;
  Index batch_size = 32;
  std::uint64_t seed = 1;
  LossSelection loss;
  BiasInitMode bias_init_mode = BiasInitMode::ClosedForm;
  double weight_decay = 0.0;  // off by default
  double lr_decay = 1.0;      // per-epoch lr multiplier, 1 = constant
  std::vector<Index> hidden = {64, 64};
  Index feature_dim = 32;

  void validate() const;
};

struct EpochStats {
  Index epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;  // NaN when no validation hook is given
};

struct TrainResult {
  Encoder model;
  ClassifierBank bank;
  std::vector<EpochStats> history;
};

// Held-out data plus a fixed pair protocol for the per-epoch accuracy column.
struct ValHook {
  const SyntheticDataset* data = nullptr;
  PairSet pairs;
};

// Deterministic SGD training of encoder + classifier bank + shared bias.
// The bias is initialized by the closed form when the selected loss carries
// one (am margin path, K >= 2, ClosedForm mode), otherwise zero.
TrainResult train(const TrainConfig& config, const SyntheticDataset& data,
                  ClassifierBank bank, const ValHook* val = nullptr);

// Per-sample loss/gradients for the configured loss at the current bias.
LossGradients evaluate_selected_loss(const LossSelection& sel, const CosineLogits& cos,
                                     Index label, double bias);

// Normalized per-sample features + labels + per-class classifier directions
// and the shared bias; enough to redraw the 2D/3D layouts externally.
// Header: `# K=<K> D_feat=<D> r=<r> m=<m> lambda=<l> t=<t> b=<b>`,
// rows `label,f_0,...` then `W,<class>,w_0,...`.
void export_features(const Encoder& model, const ClassifierBank& bank,
                     const Hyperparams& hp, const SyntheticDataset& ds,
                     const std::string& path);

struct FeatureExport {
  Index num_classes = 0;
  Index feature_dim = 0;
  double r = 0.0, m = 0.0, lambda = 0.0, t = 0.0, bias = 0.0;
  std::vector<Index> labels;
  Matrix features;    // N x D_feat, unit rows
  Matrix classifier;  // K x D_feat, unit rows
};

FeatureExport load_features(const std::string& path);

// Plain-text model persistence (%.17g, exact round trip).
void save_model(const Encoder& model, const ClassifierBank& bank, const std::string& path);

struct LoadedModel {
  Encoder model;
  ClassifierBank bank;
};

LoadedModel load_model(const std::string& path);

}  // namespace sf2
