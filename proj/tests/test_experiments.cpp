#include <doctest.h>

#include <cmath>

#include "sf2/experiments.hpp"

using namespace sf2;

namespace {

TrainConfig smoke_config() {
  TrainConfig config;
  config.lr = 0.05;
  config.epochs = 2;
  config.batch_size = 16;
  config.seed = 3;
  config.hidden = {12};
  config.feature_dim = 6;
  config.loss.hp = Hyperparams::tied(0.7, 30.0, 0.4, 3.0);
  return config;
}

}  // namespace

TEST_CASE("ablation ladder rows are the five cumulative settings") {
  const auto rows = ablation_ladder();
  REQUIRE(rows.size() == 5);
  CHECK(flags_name(rows[0]) == "none");
  CHECK(flags_name(rows[1]) == "pn");
  CHECK(flags_name(rows[2]) == "pn+eh");
  CHECK(flags_name(rows[3]) == "pn+eh+am");
  CHECK(flags_name(rows[4]) == "pn+eh+am+sa");
}

TEST_CASE("run_ablation trains every row and is deterministic") {
  const SyntheticDataset ds = make_synthetic(4, 8, 24, 4.0, 77);
  const TrainConfig config = smoke_config();
  const std::vector<AblationFlags> rows = {ablation_ladder()[0], ablation_ladder()[4],
                                           ablation_ladder()[4]};
  const auto a = run_ablation(ds, rows, config, 0.25, 16, 16);
  const auto b = run_ablation(ds, rows, config, 0.25, 16, 16);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].accuracy >= 0.0);
    CHECK(a[i].accuracy <= 1.0);
    CHECK(a[i].accuracy == b[i].accuracy);
  }
  CHECK(a[1].accuracy == a[2].accuracy);  // duplicate rows give identical results
}

TEST_CASE("run_noise_sweep emits one row per loss and rate") {
  const SyntheticDataset ds = make_synthetic(4, 8, 24, 4.0, 78);
  const TrainConfig config = smoke_config();
  LossSelection sf2_loss;
  sf2_loss.hp = config.loss.hp;
  LossSelection softmax_loss;
  softmax_loss.family = LossFamily::Softmax;
  const auto rows = run_noise_sweep(ds, {0.0, 0.4}, {{"sphereface2", sf2_loss},
                                                     {"softmax", softmax_loss}},
                                    config, 0.25, 16, 16);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].loss == "sphereface2");
  CHECK(rows[0].rate == 0.0);
  CHECK(rows[3].loss == "softmax");
  CHECK(rows[3].rate == 0.4);
  for (const auto& row : rows) {
    CHECK(std::isfinite(row.accuracy));
    CHECK(row.accuracy >= 0.0);
    CHECK(row.accuracy <= 1.0);
  }
}
