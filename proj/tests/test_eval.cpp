#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sf2/errors.hpp"
#include "sf2/eval.hpp"

using namespace sf2;

namespace {

// dense threshold sweep on a lattice of scores; exact because scores are
// multiples of 0.02 and the grid step is finer than half the lattice gap
std::size_t brute_force_best_correct(const std::vector<double>& scores,
                                     const std::vector<bool>& same) {
  std::size_t best = 0;
  for (double threshold = -1.1; threshold <= 1.1; threshold += 0.001) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool accept = scores[i] > threshold;
      if (accept == static_cast<bool>(same[i])) ++correct;
    }
    best = std::max(best, correct);
  }
  return best;
}

SyntheticDataset identity_dataset(const Matrix& inputs, std::vector<Index> labels) {
  SyntheticDataset ds;
  ds.inputs = inputs;
  ds.true_labels = labels;
  ds.labels = std::move(labels);
  ds.declared_classes = 0;
  return ds;
}

Encoder identity_encoder(Index dim) {
  Rng rng(1);
  Encoder enc({dim, dim}, rng);
  enc.weights()[0] = Matrix::Identity(dim, dim);
  enc.biases()[0].setZero();
  return enc;
}

}  // namespace

TEST_CASE("build_pairs respects counts, distinctness and determinism") {
  const SyntheticDataset ds = make_synthetic(4, 6, 10, 6.0, 21);
  const PairSet a = build_pairs(ds, 30, 40, 9);
  const PairSet b = build_pairs(ds, 30, 40, 9);
  CHECK(a.n_pos == 30);
  CHECK(a.n_neg == 40);
  REQUIRE(a.pairs.size() == 70);
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].a == b.pairs[i].a);
    CHECK(a.pairs[i].b == b.pairs[i].b);
    CHECK(a.pairs[i].a != a.pairs[i].b);
    const bool same = ds.true_labels[static_cast<std::size_t>(a.pairs[i].a)] ==
                      ds.true_labels[static_cast<std::size_t>(a.pairs[i].b)];
    CHECK(a.pairs[i].same == same);
  }

  const PairSet neg_only = build_pairs(ds, 0, 10, 9);
  CHECK(neg_only.n_pos == 0);
  for (const auto& p : neg_only.pairs) CHECK(!p.same);
}

TEST_CASE("build_pairs combinatorial limit: two samples per class") {
  Matrix inputs = Matrix::Identity(4, 4);
  const SyntheticDataset ds = identity_dataset(inputs, {0, 0, 1, 1});
  const PairSet max_pos = build_pairs(ds, 2, 1, 3);  // C(2,2) per class = 2 total
  CHECK(max_pos.n_pos == 2);
  CHECK_THROWS_AS(build_pairs(ds, 3, 1, 3), InsufficientData);
  CHECK_THROWS_AS(build_pairs(ds, 0, 5, 3), InsufficientData);  // only 4 cross pairs
}

TEST_CASE("pair_scores on embeddings with known geometry") {
  Matrix inputs(4, 3);
  inputs << 1, 0, 0,  //
      1, 0, 0,        // duplicate of row 0
      -1, 0, 0,       // antipodal
      0, 1, 0;
  const SyntheticDataset ds = identity_dataset(inputs, {0, 0, 1, 2});
  const Encoder enc = identity_encoder(3);

  PairSet pairs;
  pairs.pairs = {{0, 1, true}, {0, 2, false}, {0, 3, false}, {3, 0, false}};
  const auto scores = pair_scores(enc, ds, pairs);
  CHECK(scores[0] == 1.0);
  CHECK(scores[1] == -1.0);
  CHECK(scores[2] == 0.0);
  CHECK(scores[3] == scores[2]);  // symmetric in (a,b)
}

TEST_CASE("pair_scores is invariant to positive rescaling of embeddings") {
  const SyntheticDataset ds = make_synthetic(3, 5, 8, 6.0, 2);
  const PairSet pairs = build_pairs(ds, 10, 10, 4);
  Rng rng(8);
  Encoder enc({5, 6, 4}, rng);
  const auto base = pair_scores(enc, ds, pairs);

  Encoder doubled = enc;
  doubled.weights().back() *= 2.0;  // scales every embedding by exactly 2
  doubled.biases().back() *= 2.0;
  const auto scaled = pair_scores(doubled, ds, pairs);
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(scaled[i] == base[i]);
}

TEST_CASE("best_threshold_accuracy frozen cases") {
  {
    // perfectly separated
    const auto res = best_threshold_accuracy({0.9, 0.8, 0.1, 0.0},
                                             {true, true, false, false});
    CHECK(res.accuracy == 1.0);
    CHECK(res.threshold == doctest::Approx(0.45));
  }
  {
    // all labels positive: accuracy 1 at a threshold below the minimum
    const auto res = best_threshold_accuracy({0.2, 0.5}, {true, true});
    CHECK(res.accuracy == 1.0);
    CHECK(res.threshold < 0.2);
  }
  {
    // interleaved: pos {0.9, 0.1}, neg {0.8, 0.0} -> 3/4, smallest threshold
    const auto res = best_threshold_accuracy({0.9, 0.1, 0.8, 0.0},
                                             {true, true, false, false});
    CHECK(res.accuracy == 0.75);
    CHECK(res.threshold == doctest::Approx(0.05));
  }
  CHECK_THROWS_AS(best_threshold_accuracy({}, {}), InsufficientData);
}

TEST_CASE("best_threshold_accuracy equals the dense-grid oracle") {
  Rng rng(99);
  std::uniform_int_distribution<int> lattice(-50, 50);
  std::uniform_int_distribution<int> size(1, 24);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = size(rng);
    std::vector<double> scores;
    std::vector<bool> same;
    for (int i = 0; i < n; ++i) {
      scores.push_back(lattice(rng) * 0.02);
      same.push_back(coin(rng));
    }
    const auto res = best_threshold_accuracy(scores, same);
    const auto oracle = brute_force_best_correct(scores, same);
    CHECK(res.accuracy * n == doctest::Approx(static_cast<double>(oracle)));
  }
}

TEST_CASE("tar_at_far basics") {
  // all positives above all negatives
  std::vector<double> scores = {0.9, 0.8, 0.7, 0.2, 0.1, 0.05, 0.0, -0.2};
  std::vector<bool> same = {true, true, true, false, false, false, false, false};
  const auto tar = tar_at_far(scores, same, {0.2, 0.4, 1.0});
  CHECK(tar[0] == 1.0);
  CHECK(tar[1] == 1.0);
  CHECK(tar[2] == 1.0);

  // FAR=1.0 counts positives above the global minimum
  std::vector<double> mixed = {0.5, -0.4, 0.1, -0.4};
  std::vector<bool> mixed_same = {true, true, false, false};
  const auto tar2 = tar_at_far(mixed, mixed_same, {1.0});
  CHECK(tar2[0] == 0.5);  // the positive at -0.4 ties the global min

  CHECK_THROWS_AS(tar_at_far(scores, same, {0.05}), InsufficientData);  // < 1/5
  CHECK_THROWS_AS(tar_at_far(scores, same, {0.0}), DomainError);
  CHECK_THROWS_AS(tar_at_far({0.5}, {true}, {0.5}), InsufficientData);
}

TEST_CASE("tar_at_far is monotone in the level") {
  Rng rng(123);
  std::uniform_real_distribution<double> draw(-1.0, 1.0);
  std::vector<double> scores;
  std::vector<bool> same;
  for (int i = 0; i < 400; ++i) {
    scores.push_back(draw(rng));
    same.push_back(i % 2 == 0);
  }
  const std::vector<double> levels = {0.01, 0.05, 0.1, 0.3, 0.7, 1.0};
  const auto tar = tar_at_far(scores, same, levels);
  for (std::size_t i = 1; i < tar.size(); ++i) CHECK(tar[i] >= tar[i - 1]);
}

TEST_CASE("random scores give TAR close to FAR") {
  Rng rng(2024);
  std::uniform_real_distribution<double> draw(-1.0, 1.0);
  std::vector<double> scores;
  std::vector<bool> same;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    scores.push_back(draw(rng));
    same.push_back(i < n / 2);
  }
  const std::vector<double> levels = {0.1, 0.3, 0.5};
  const auto tar = tar_at_far(scores, same, levels);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double sigma = std::sqrt(levels[i] * (1 - levels[i]) / (n / 2.0));
    CHECK(std::abs(tar[i] - levels[i]) <= 4.0 * sigma + 2.0 / (n / 2.0));
  }
}

TEST_CASE("distribution_overlap endpoints and symmetry") {
  const std::vector<double> a = {0.1, 0.2, 0.3, 0.1};
  CHECK(distribution_overlap(a, a) == 1.0);

  const std::vector<double> lo = {-0.9, -0.8, -0.7};
  const std::vector<double> hi = {0.7, 0.8, 0.9};
  CHECK(distribution_overlap(lo, hi) == 0.0);

  Rng rng(6);
  std::uniform_real_distribution<double> draw(-1.0, 1.0);
  std::vector<double> p, q;
  for (int i = 0; i < 300; ++i) p.push_back(draw(rng));
  for (int i = 0; i < 200; ++i) q.push_back(draw(rng));
  const double pq = distribution_overlap(p, q);
  CHECK(pq == distribution_overlap(q, p));
  CHECK(pq >= 0.0);
  CHECK(pq <= 1.0);
  CHECK_THROWS_AS(distribution_overlap({}, a), InsufficientData);
  CHECK_THROWS_AS(distribution_overlap(a, a, 0), DomainError);
}
