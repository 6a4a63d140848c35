#include "sf2/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "sf2/errors.hpp"
#include "sf2/geometry.hpp"
#include "sf2/numerics.hpp"

namespace sf2 {

namespace {

std::uint64_t pair_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

}  // namespace

PairSet build_pairs(const SyntheticDataset& ds, Index n_pos, Index n_neg,
                    std::uint64_t seed) {
  if (n_pos < 0 || n_neg < 0) throw DomainError("build_pairs: negative pair counts");
  const Index n = ds.num_samples();
  const Index k = ds.num_classes();
  std::vector<std::vector<Index>> per_class(static_cast<std::size_t>(std::max<Index>(k, 1)));
  for (Index i = 0; i < n; ++i)
    per_class[static_cast<std::size_t>(ds.true_labels[static_cast<std::size_t>(i)])]
        .push_back(i);

  long long total_pos = 0;
  for (const auto& cls : per_class) {
    const auto c = static_cast<long long>(cls.size());
    total_pos += c * (c - 1) / 2;
  }
  const long long total_all = static_cast<long long>(n) * (n - 1) / 2;
  const long long total_neg = total_all - total_pos;
  if (n_pos > total_pos)
    throw InsufficientData("build_pairs: not enough distinct positive pairs");
  if (n_neg > total_neg)
    throw InsufficientData("build_pairs: not enough distinct negative pairs");

  Rng rng(mix_seed(seed, 0x9a));
  PairSet out;
  out.pairs.reserve(static_cast<std::size_t>(n_pos + n_neg));

  // Positives: the distinct same-class pairs are usually few; enumerate and
  // take a random prefix.
  {
    std::vector<std::pair<Index, Index>> all;
    all.reserve(static_cast<std::size_t>(total_pos));
    for (const auto& cls : per_class)
      for (std::size_t i = 0; i < cls.size(); ++i)
        for (std::size_t j = i + 1; j < cls.size(); ++j) all.emplace_back(cls[i], cls[j]);
    std::shuffle(all.begin(), all.end(), rng);
    for (Index i = 0; i < n_pos; ++i)
      out.pairs.push_back({all[static_cast<std::size_t>(i)].first,
                           all[static_cast<std::size_t>(i)].second, true});
  }

  // Negatives: rejection-sample distinct cross-class pairs.
  if (n_neg > 0) {
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(static_cast<std::size_t>(n_neg) * 2);
    while (static_cast<Index>(seen.size()) < n_neg) {
      const Index a = pick(rng);
      const Index b = pick(rng);
      if (a == b) continue;
      if (ds.true_labels[static_cast<std::size_t>(a)] ==
          ds.true_labels[static_cast<std::size_t>(b)])
        continue;
      if (!seen.insert(pair_key(a, b)).second) continue;
      out.pairs.push_back({std::min(a, b), std::max(a, b), false});
    }
  }

  out.n_pos = n_pos;
  out.n_neg = n_neg;
  return out;
}

std::vector<double> pair_scores(const Encoder& model, const SyntheticDataset& ds,
                                const PairSet& pairs) {
  std::unordered_map<Index, Vector> cache;
  auto unit_embedding = [&](Index idx) -> const Vector& {
    auto it = cache.find(idx);
    if (it == cache.end()) {
      Vector f = model.forward(ds.inputs.row(idx).transpose());
      it = cache.emplace(idx, l2_normalize(f)).first;
    }
    return it->second;
  };
  std::vector<double> scores;
  scores.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs)
    scores.push_back(clamp_unit(unit_embedding(p.a).dot(unit_embedding(p.b))));
  return scores;
}

ThresholdResult best_threshold_accuracy(const std::vector<double>& scores,
                                        const std::vector<bool>& same) {
  if (scores.empty() || scores.size() != same.size())
    throw InsufficientData("best_threshold_accuracy: empty or mismatched inputs");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // prefix_neg[p] = negatives among the p lowest scores; accept-if-above, so
  // accuracy at threshold between ranks p-1 and p is (pos above) + (neg below).
  std::vector<std::size_t> prefix_neg(n + 1, 0), prefix_pos(n + 1, 0);
  for (std::size_t p = 0; p < n; ++p) {
    prefix_neg[p + 1] = prefix_neg[p] + (same[order[p]] ? 0 : 1);
    prefix_pos[p + 1] = prefix_pos[p] + (same[order[p]] ? 1 : 0);
  }
  const std::size_t total_pos = prefix_pos[n];

  ThresholdResult best;
  std::size_t best_correct = 0;
  bool first = true;
  auto consider = [&](double threshold, std::size_t p) {
    const std::size_t correct = (total_pos - prefix_pos[p]) + prefix_neg[p];
    if (first || correct > best_correct) {
      first = false;
      best_correct = correct;
      best.threshold = threshold;
    }
  };

  consider(scores[order[0]] - 1.0, 0);
  for (std::size_t p = 1; p < n; ++p) {
    const double lo = scores[order[p - 1]];
    const double hi = scores[order[p]];
    if (lo < hi) consider((lo + hi) / 2.0, p);
  }
  consider(scores[order[n - 1]] + 1.0, n);

  best.accuracy = static_cast<double>(best_correct) / static_cast<double>(n);
  return best;
}

std::vector<double> tar_at_far(const std::vector<double>& scores,
                               const std::vector<bool>& same,
                               const std::vector<double>& far_levels) {
  if (scores.size() != same.size())
    throw InsufficientData("tar_at_far: mismatched inputs");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i)
    (same[i] ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty())
    throw InsufficientData("tar_at_far: need both positive and negative scores");
  std::vector<double> neg_desc = neg;
  std::sort(neg_desc.begin(), neg_desc.end(), std::greater<>());
  const double global_min = std::min(*std::min_element(pos.begin(), pos.end()),
                                     neg_desc.back());
  const auto n_neg = static_cast<double>(neg.size());

  std::vector<double> out;
  out.reserve(far_levels.size());
  for (double level : far_levels) {
    if (!(level > 0.0 && level <= 1.0))
      throw DomainError("tar_at_far: far level must be in (0,1]");
    const auto allowed = static_cast<long long>(std::floor(level * n_neg + 1e-9));
    if (allowed < 1)
      throw InsufficientData("tar_at_far: far level below 1/n_neg resolution");
    const double threshold = (allowed >= static_cast<long long>(neg.size()))
                                 ? global_min
                                 : neg_desc[static_cast<std::size_t>(allowed)];
    std::size_t accepted = 0;
    for (double s : pos)
      if (s > threshold) ++accepted;
    out.push_back(static_cast<double>(accepted) / static_cast<double>(pos.size()));
  }
  return out;
}

double distribution_overlap(const std::vector<double>& pos_scores,
                            const std::vector<double>& neg_scores, int bins) {
  if (pos_scores.empty() || neg_scores.empty())
    throw InsufficientData("distribution_overlap: empty score set");
  if (bins < 1) throw DomainError("distribution_overlap: bins must be >= 1");
  const double width = 2.0 / bins;
  auto histogram = [&](const std::vector<double>& v) {
    std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
    for (double s : v) {
      auto idx = static_cast<long long>(std::floor((s + 1.0) / width));
      idx = std::clamp<long long>(idx, 0, bins - 1);
      h[static_cast<std::size_t>(idx)] += 1.0;
    }
    for (double& x : h) x /= static_cast<double>(v.size());
    return h;
  };
  const auto hp = histogram(pos_scores);
  const auto hn = histogram(neg_scores);
  double overlap = 0.0;
  for (int b = 0; b < bins; ++b)
    overlap += std::min(hp[static_cast<std::size_t>(b)], hn[static_cast<std::size_t>(b)]);
  return overlap;
}

}  // namespace sf2
