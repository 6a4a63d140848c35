#include "sf2/experiments.hpp"

namespace sf2 {

std::vector<AblationFlags> ablation_ladder() {
  return {
      AblationFlags{false, false, false, false},
      AblationFlags{true, false, false, false},
      AblationFlags{true, true, false, false},
      AblationFlags{true, true, true, false},
      AblationFlags{true, true, true, true},
  };
}

std::string flags_name(const AblationFlags& flags) {
  if (!flags.pn && !flags.eh && !flags.am && !flags.sa) return "none";
  std::string name;
  auto append = [&](bool on, const char* tag) {
    if (!on) return;
    if (!name.empty()) name += '+';
    name += tag;
  };
  append(flags.pn, "pn");
  append(flags.eh, "eh");
  append(flags.am, "am");
  append(flags.sa, "sa");
  return name;
}

namespace {

struct EvalSplit {
  SyntheticDataset train;
  SyntheticDataset val;
  PairSet pairs;
};

EvalSplit make_split(const SyntheticDataset& ds, double val_fraction, Index n_pos,
                     Index n_neg, std::uint64_t seed) {
  EvalSplit split;
  auto [train, val] = split_train_val(ds, val_fraction, mix_seed(seed, 0x3d));
  split.train = std::move(train);
  split.val = std::move(val);
  split.pairs = build_pairs(split.val, n_pos, n_neg, mix_seed(seed, 0x3e));
  return split;
}

double held_out_accuracy(const TrainResult& result, const EvalSplit& split) {
  const auto scores = pair_scores(result.model, split.val, split.pairs);
  std::vector<bool> same;
  same.reserve(split.pairs.pairs.size());
  for (const auto& p : split.pairs.pairs) same.push_back(p.same);
  return best_threshold_accuracy(scores, same).accuracy;
}

}  // namespace

std::vector<AblationRow> run_ablation(const SyntheticDataset& ds,
                                      const std::vector<AblationFlags>& rows,
                                      const TrainConfig& base, double val_fraction,
                                      Index n_pos, Index n_neg) {
  const EvalSplit split = make_split(ds, val_fraction, n_pos, n_neg, base.seed);
  std::vector<AblationRow> out;
  out.reserve(rows.size());
  for (const AblationFlags& flags : rows) {
    flags.validate();
    TrainConfig config = base;
    config.loss.family = LossFamily::SphereFace2;
    config.loss.flags = flags;
    if (!flags.pn && !flags.eh && !flags.am && !flags.sa) {
      // naive weighting fails to converge; fall back to the per-term fraction
      config.loss.flags.pn = true;
      config.loss.hp.lambda =
          static_cast<double>(ds.num_classes() - 1) / static_cast<double>(ds.num_classes());
    }
    Rng bank_rng(mix_seed(config.seed, 0xba));
    ClassifierBank bank(split.train.num_classes(), config.feature_dim, bank_rng);
    TrainResult result = train(config, split.train, std::move(bank));
    AblationRow row;
    row.flags = flags;
    row.name = flags_name(flags);
    row.accuracy = held_out_accuracy(result, split);
    row.final_train_loss = result.history.empty() ? 0.0 : result.history.back().train_loss;
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<NoiseRow> run_noise_sweep(
    const SyntheticDataset& clean, const std::vector<double>& rates,
    const std::vector<std::pair<std::string, LossSelection>>& losses,
    const TrainConfig& base, double val_fraction, Index n_pos, Index n_neg) {
  const EvalSplit split = make_split(clean, val_fraction, n_pos, n_neg, base.seed);
  std::vector<NoiseRow> out;
  for (const auto& [name, selection] : losses) {
    for (double rate : rates) {
      const SyntheticDataset noisy =
          inject_label_noise(split.train, rate, mix_seed(base.seed, 0x4f));
      TrainConfig config = base;
      config.loss = selection;
      Rng bank_rng(mix_seed(config.seed, 0xba));
      ClassifierBank bank(noisy.num_classes(), config.feature_dim, bank_rng);
      TrainResult result = train(config, noisy, std::move(bank));
      out.push_back({name, rate, held_out_accuracy(result, split)});
    }
  }
  return out;
}

}  // namespace sf2
