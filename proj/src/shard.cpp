#include "sf2/shard.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <thread>

#include "sf2/errors.hpp"
#include "sf2/geometry.hpp"
#include "sf2/numerics.hpp"
#include "sf2/sim_adjust.hpp"

namespace sf2 {

ShardPlan ShardPlan::contiguous(Index num_classes, Index num_shards) {
  if (num_shards < 1 || num_shards > num_classes)
    throw InvalidPlan("ShardPlan: need 1 <= S <= K");
  ShardPlan plan;
  const Index base = num_classes / num_shards;
  const Index rem = num_classes % num_shards;
  Index begin = 0;
  for (Index s = 0; s < num_shards; ++s) {
    const Index len = base + (s < rem ? 1 : 0);
    plan.ranges.emplace_back(begin, begin + len);
    begin += len;
  }
  return plan;
}

Index ShardPlan::owner(Index cls) const {
  auto it = std::upper_bound(ranges.begin(), ranges.end(), cls,
                             [](Index c, const auto& r) { return c < r.second; });
  if (it == ranges.end() || cls < it->first)
    throw InvalidPlan("ShardPlan: class outside every range");
  return static_cast<Index>(it - ranges.begin());
}

void ShardPlan::validate() const {
  if (ranges.empty()) throw InvalidPlan("ShardPlan: no shards");
  Index expect = 0;
  for (const auto& [begin, end] : ranges) {
    if (begin != expect || end <= begin)
      throw InvalidPlan("ShardPlan: ranges must be nonempty, disjoint and cover [0,K)");
    expect = end;
  }
}

InstrumentedWeights::InstrumentedWeights(const Matrix& weights, const ShardPlan& plan)
    : weights_(weights), plan_(plan),
      remote_reads_(static_cast<std::size_t>(plan.num_shards()), 0) {}

Vector InstrumentedWeights::row(Index shard, Index cls) const {
  if (plan_.owner(cls) != shard)
    remote_reads_[static_cast<std::size_t>(shard)] += weights_.cols();
  return weights_.row(cls).transpose();
}

namespace {

struct ShardScratch {
  std::vector<double> softplus_terms;  // per owned class (0 at y)
  std::vector<double> sigmoid_terms;
  std::vector<double> d_cos;
  Matrix d_weights;          // rows for owned classes
  std::vector<Vector> feature_contribs;
  detail::TermEval pos;      // populated by the shard owning y
};

}  // namespace

ShardedStepResult sharded_step_sphereface2(const Eigen::Ref<const Vector>& x, Index y,
                                           const ShardPlan& plan,
                                           const ClassifierBank& bank,
                                           const Hyperparams& hp, double bias) {
  plan.validate();
  if (plan.num_classes() != bank.num_classes())
    throw InvalidPlan("sharded_step: plan K != bank K");
  if (y < 0 || y >= bank.num_classes())
    throw LabelOutOfRange("sharded_step: label outside [0,K)");
  hp.validate();

  const detail::LossForm form = detail::final_form(hp, bias);
  const double x_norm = x.norm();
  if (!(x_norm > kNormEps)) throw DegenerateVector("sharded_step: ||x|| <= 1e-12");
  const Vector x_unit = x / x_norm;

  const Index k = bank.num_classes();
  const Index s_count = plan.num_shards();
  const Index dim = bank.dim();
  InstrumentedWeights access(bank.weights(), plan);

  // Local phase: each shard evaluates its own classes only.
  std::vector<ShardScratch> scratch(static_cast<std::size_t>(s_count));
  for (Index s = 0; s < s_count; ++s) {
    const auto [begin, end] = plan.ranges[static_cast<std::size_t>(s)];
    auto& sc = scratch[static_cast<std::size_t>(s)];
    const auto len = static_cast<std::size_t>(end - begin);
    sc.softplus_terms.assign(len, 0.0);
    sc.sigmoid_terms.assign(len, 0.0);
    sc.d_cos.assign(len, 0.0);
    sc.d_weights.resize(static_cast<Index>(len), dim);
    sc.feature_contribs.resize(len);
    for (Index cls = begin; cls < end; ++cls) {
      const auto local = static_cast<std::size_t>(cls - begin);
      const Vector w_row = access.row(s, cls);
      const double c = cosine_against_unit(w_row, x_unit);
      double d_cos;
      if (cls == y) {
        sc.pos = detail::positive_term(c, form);
        d_cos = -form.w_pos * sc.pos.sigmoid_term * sc.pos.dlogit_dcos;
      } else {
        const detail::TermEval neg = detail::negative_term(c, form);
        sc.softplus_terms[local] = neg.softplus_term;
        sc.sigmoid_terms[local] = neg.sigmoid_term;
        d_cos = form.w_neg * neg.sigmoid_term * neg.dlogit_dcos;
      }
      sc.d_cos[local] = d_cos;
      sc.d_weights.row(static_cast<Index>(local)) =
          cosine_grad_weight(w_row, x_unit, c, d_cos).transpose();
      sc.feature_contribs[local] =
          cosine_grad_feature(w_row, x_unit, x_norm, c, d_cos);
    }
  }

  // Merge: per-class terms in class order (shards are contiguous, so
  // shard-major order is class order) -- same accumulation sequence as the
  // unsharded evaluator.
  ShardedStepResult result;
  result.grads.d_cos = Vector::Zero(k);
  result.grads.d_weights.resize(k, dim);
  result.grads.d_feature = Vector::Zero(dim);
  double neg_sp_sum = 0.0;
  double neg_sig_sum = 0.0;
  const Index y_shard = plan.owner(y);
  const detail::TermEval& pos = scratch[static_cast<std::size_t>(y_shard)].pos;
  for (Index s = 0; s < s_count; ++s) {
    const auto [begin, end] = plan.ranges[static_cast<std::size_t>(s)];
    const auto& sc = scratch[static_cast<std::size_t>(s)];
    for (Index cls = begin; cls < end; ++cls) {
      const auto local = static_cast<std::size_t>(cls - begin);
      if (cls != y) {
        neg_sp_sum += sc.softplus_terms[local];
        neg_sig_sum += sc.sigmoid_terms[local];
      }
      result.grads.d_cos[cls] = sc.d_cos[local];
      result.grads.d_weights.row(cls) = sc.d_weights.row(static_cast<Index>(local));
      result.grads.d_feature += sc.feature_contribs[local];
    }
  }
  result.grads.value = form.w_pos * pos.softplus_term + form.w_neg * neg_sp_sum;
  result.grads.d_bias = -form.w_pos * pos.sigmoid_term + form.w_neg * neg_sig_sum;

  result.per_shard.resize(static_cast<std::size_t>(s_count));
  for (Index s = 0; s < s_count; ++s) {
    auto& cs = result.per_shard[static_cast<std::size_t>(s)];
    cs.feature_broadcast_scalars = dim;
    cs.remote_weight_scalars_read = access.remote_scalars(s);
    cs.normalizer_exchange_scalars = 0;
    cs.reduction_scalars = 1 + dim;  // partial loss + partial feature gradient
    result.totals += cs;
  }
  return result;
}

ShardedStepResult sharded_step_softmax(const Eigen::Ref<const Vector>& x, Index y,
                                       const ShardPlan& plan, const ClassifierBank& bank,
                                       double scale, double margin) {
  plan.validate();
  if (plan.num_classes() != bank.num_classes())
    throw InvalidPlan("sharded_step: plan K != bank K");
  if (y < 0 || y >= bank.num_classes())
    throw LabelOutOfRange("sharded_step: label outside [0,K)");
  if (!(scale > 0.0)) throw InvalidHyperparams("sharded_step_softmax: scale must be > 0");

  const double x_norm = x.norm();
  if (!(x_norm > kNormEps)) throw DegenerateVector("sharded_step: ||x|| <= 1e-12");
  const Vector x_unit = x / x_norm;

  const Index k = bank.num_classes();
  const Index s_count = plan.num_shards();
  const Index dim = bank.dim();
  InstrumentedWeights access(bank.weights(), plan);

  // Phase 1: local logits and local max per shard.
  std::vector<Vector> logits(static_cast<std::size_t>(s_count));
  std::vector<Vector> cosines(static_cast<std::size_t>(s_count));
  std::vector<double> local_max(static_cast<std::size_t>(s_count));
  for (Index s = 0; s < s_count; ++s) {
    const auto [begin, end] = plan.ranges[static_cast<std::size_t>(s)];
    auto& l = logits[static_cast<std::size_t>(s)];
    auto& cs = cosines[static_cast<std::size_t>(s)];
    l.resize(end - begin);
    cs.resize(end - begin);
    for (Index cls = begin; cls < end; ++cls) {
      const Vector w_row = access.row(s, cls);
      const double c = cosine_against_unit(w_row, x_unit);
      cs[cls - begin] = c;
      l[cls - begin] = scale * (cls == y ? c - margin : c);
    }
    local_max[static_cast<std::size_t>(s)] = l.maxCoeff();
  }
  // Exchange 1: global max (one scalar per shard).
  double global_max = local_max[0];
  for (Index s = 1; s < s_count; ++s)
    global_max = std::max(global_max, local_max[static_cast<std::size_t>(s)]);

  // Phase 2 + exchange 2: partial exp sums (one scalar per shard).
  double z = 0.0;
  for (Index s = 0; s < s_count; ++s) {
    double partial = 0.0;
    const auto& l = logits[static_cast<std::size_t>(s)];
    for (Index i = 0; i < l.size(); ++i) partial += std::exp(l[i] - global_max);
    z += partial;
  }

  // Phase 3: local gradient scaling per shard; flat per-class merge.
  ShardedStepResult result;
  result.grads.d_cos = Vector::Zero(k);
  result.grads.d_weights.resize(k, dim);
  result.grads.d_feature = Vector::Zero(dim);
  const Index y_shard = plan.owner(y);
  const auto y_local = y - plan.ranges[static_cast<std::size_t>(y_shard)].first;
  result.grads.value =
      std::log(z) + global_max - logits[static_cast<std::size_t>(y_shard)][y_local];
  for (Index s = 0; s < s_count; ++s) {
    const auto [begin, end] = plan.ranges[static_cast<std::size_t>(s)];
    for (Index cls = begin; cls < end; ++cls) {
      const double p =
          std::exp(logits[static_cast<std::size_t>(s)][cls - begin] - global_max) / z;
      const double indicator = (cls == y) ? 1.0 : 0.0;
      const double d_cos = scale * (p - indicator);
      result.grads.d_cos[cls] = d_cos;
      const Vector w_row = access.row(s, cls);
      const double c = cosines[static_cast<std::size_t>(s)][cls - begin];
      result.grads.d_weights.row(cls) =
          cosine_grad_weight(w_row, x_unit, c, d_cos).transpose();
      result.grads.d_feature += cosine_grad_feature(w_row, x_unit, x_norm, c, d_cos);
    }
  }
  result.grads.d_bias = 0.0;

  result.per_shard.resize(static_cast<std::size_t>(s_count));
  for (Index s = 0; s < s_count; ++s) {
    auto& cs = result.per_shard[static_cast<std::size_t>(s)];
    cs.feature_broadcast_scalars = dim;
    cs.remote_weight_scalars_read = access.remote_scalars(s);
    cs.normalizer_exchange_scalars = (s_count > 1) ? 2 : 0;
    cs.reduction_scalars = 1 + dim;
    result.totals += cs;
  }
  return result;
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Shared state of one bench configuration. Workers own disjoint contiguous
// row blocks of `weights`; the per-shard slots are the modeled wire traffic.
struct BenchShared {
  RowMajor weights;
  Matrix features;  // batch x D, raw
  std::vector<Vector> x_units;
  detail::LossForm form;
  double softmax_scale = 30.0;
  Index label = 0;
  double lr = 1e-4;
  std::vector<double> partial_loss;
  std::vector<Vector> partial_feature;
  std::vector<double> local_max;
  std::vector<double> local_expsum;
  double global_max = 0.0;
  double global_z = 0.0;
};

// Forward + backward + in-place update for one worker's row block.
void bench_block_sphereface2(BenchShared& sh, Index begin, Index end, Index sample,
                             Index shard) {
  const Vector& x_unit = sh.x_units[static_cast<std::size_t>(sample)];
  const double x_norm = sh.features.row(sample).norm();
  double loss_sum = 0.0;
  Vector feat = Vector::Zero(sh.weights.cols());
  for (Index cls = begin; cls < end; ++cls) {
    auto row = sh.weights.row(cls);
    const double n = row.norm();
    const double c = clamp_unit(row.dot(x_unit) / n);
    double d_cos;
    if (cls == sh.label) {
      const detail::TermEval pos = detail::positive_term(c, sh.form);
      loss_sum += sh.form.w_pos * pos.softplus_term;
      d_cos = -sh.form.w_pos * pos.sigmoid_term * pos.dlogit_dcos;
    } else {
      const detail::TermEval neg = detail::negative_term(c, sh.form);
      loss_sum += sh.form.w_neg * neg.softplus_term;
      d_cos = sh.form.w_neg * neg.sigmoid_term * neg.dlogit_dcos;
    }
    feat += (d_cos / x_norm) * (row.transpose() / n - c * x_unit);
    row -= (sh.lr * d_cos / n) * (x_unit.transpose() - c * (row / n));
  }
  sh.partial_loss[static_cast<std::size_t>(shard)] += loss_sum;
  sh.partial_feature[static_cast<std::size_t>(shard)] += feat;
}

}  // namespace

std::vector<BenchRow> throughput_bench(Index num_classes, Index dim,
                                       const std::vector<Index>& shard_counts,
                                       Index batch, Index reps, std::uint64_t seed) {
  if (num_classes < 2 || dim < 2) throw InvalidPlan("throughput_bench: K and D too small");
  if (batch < 1 || reps < 1) throw InvalidPlan("throughput_bench: batch and reps >= 1");

  std::vector<BenchRow> rows;
  Hyperparams hp;  // lambda=0.7, r=30, m=0.4, t=3

  for (const bool softmax : {false, true}) {
    for (Index s_count : shard_counts) {
      const ShardPlan plan = ShardPlan::contiguous(num_classes, s_count);

      BenchShared sh;
      sh.form = detail::final_form(hp, -10.0);
      Rng rng(mix_seed(seed, 0xbe));
      std::normal_distribution<double> normal(0.0, 1.0);
      sh.weights.resize(num_classes, dim);
      for (Index i = 0; i < num_classes; ++i) {
        for (Index j = 0; j < dim; ++j) sh.weights(i, j) = normal(rng);
        sh.weights.row(i) /= sh.weights.row(i).norm();
      }
      sh.features.resize(batch, dim);
      for (Index b = 0; b < batch; ++b) {
        for (Index j = 0; j < dim; ++j) sh.features(b, j) = normal(rng);
        sh.x_units.push_back(sh.features.row(b).transpose().normalized());
      }
      sh.partial_loss.assign(static_cast<std::size_t>(s_count), 0.0);
      sh.partial_feature.assign(static_cast<std::size_t>(s_count), Vector::Zero(dim));
      sh.local_max.assign(static_cast<std::size_t>(s_count), 0.0);
      sh.local_expsum.assign(static_cast<std::size_t>(s_count), 0.0);

      // Bulk-synchronous protocol: each phase is [workers compute] barrier
      // [coordinator reduces] barrier. sphereface2 has one phase per sample,
      // softmax three (local max / exp sums / gradients).
      std::barrier sync(static_cast<std::ptrdiff_t>(s_count) + 1);
      const Index total_steps = reps + 1;  // step 0 is warmup
      std::vector<std::thread> workers;
      std::vector<Vector> scratch_logits(static_cast<std::size_t>(s_count));

      for (Index s = 0; s < s_count; ++s) {
        workers.emplace_back([&, s] {
          const auto [begin, end] = plan.ranges[static_cast<std::size_t>(s)];
          auto& logits = scratch_logits[static_cast<std::size_t>(s)];
          logits.resize(end - begin);
          for (Index step = 0; step < total_steps; ++step) {
            for (Index b = 0; b < batch; ++b) {
              if (!softmax) {
                bench_block_sphereface2(sh, begin, end, b, s);
                sync.arrive_and_wait();
                sync.arrive_and_wait();
              } else {
                const Vector& x_unit = sh.x_units[static_cast<std::size_t>(b)];
                const double x_norm = sh.features.row(b).norm();
                for (Index cls = begin; cls < end; ++cls) {
                  auto row = sh.weights.row(cls);
                  logits[cls - begin] =
                      sh.softmax_scale * clamp_unit(row.dot(x_unit) / row.norm());
                }
                sh.local_max[static_cast<std::size_t>(s)] = logits.maxCoeff();
                sync.arrive_and_wait();
                sync.arrive_and_wait();  // coordinator publishes global max
                double partial = 0.0;
                for (Index i = 0; i < logits.size(); ++i)
                  partial += std::exp(logits[i] - sh.global_max);
                sh.local_expsum[static_cast<std::size_t>(s)] = partial;
                sync.arrive_and_wait();
                sync.arrive_and_wait();  // coordinator publishes Z
                Vector feat = Vector::Zero(dim);
                for (Index cls = begin; cls < end; ++cls) {
                  auto row = sh.weights.row(cls);
                  const double n = row.norm();
                  const double c = logits[cls - begin] / sh.softmax_scale;
                  const double p =
                      std::exp(logits[cls - begin] - sh.global_max) / sh.global_z;
                  const double d_cos =
                      sh.softmax_scale * (p - (cls == sh.label ? 1.0 : 0.0));
                  feat += (d_cos / x_norm) * (row.transpose() / n - c * x_unit);
                  row -= (sh.lr * d_cos / n) * (x_unit.transpose() - c * (row / n));
                }
                sh.partial_feature[static_cast<std::size_t>(s)] += feat;
                sync.arrive_and_wait();
                sync.arrive_and_wait();  // coordinator merges partials
              }
            }
          }
        });
      }

      using clock = std::chrono::steady_clock;
      clock::time_point t0;
      for (Index step = 0; step < total_steps; ++step) {
        if (step == 1) t0 = clock::now();
        for (Index b = 0; b < batch; ++b) {
          if (!softmax) {
            sync.arrive_and_wait();
            Vector feat = Vector::Zero(dim);
            double loss = 0.0;
            for (Index s = 0; s < s_count; ++s) {
              loss += sh.partial_loss[static_cast<std::size_t>(s)];
              feat += sh.partial_feature[static_cast<std::size_t>(s)];
              sh.partial_loss[static_cast<std::size_t>(s)] = 0.0;
              sh.partial_feature[static_cast<std::size_t>(s)].setZero();
            }
            (void)loss;
            sync.arrive_and_wait();
          } else {
            sync.arrive_and_wait();
            double m = sh.local_max[0];
            for (Index s = 1; s < s_count; ++s)
              m = std::max(m, sh.local_max[static_cast<std::size_t>(s)]);
            sh.global_max = m;
            sync.arrive_and_wait();

            sync.arrive_and_wait();
            double z = 0.0;
            for (Index s = 0; s < s_count; ++s)
              z += sh.local_expsum[static_cast<std::size_t>(s)];
            sh.global_z = z;
            sync.arrive_and_wait();

            sync.arrive_and_wait();
            Vector feat = Vector::Zero(dim);
            for (Index s = 0; s < s_count; ++s) {
              feat += sh.partial_feature[static_cast<std::size_t>(s)];
              sh.partial_feature[static_cast<std::size_t>(s)].setZero();
            }
            sync.arrive_and_wait();
          }
        }
      }
      const double elapsed_sec = std::chrono::duration<double>(clock::now() - t0).count();
      for (auto& w : workers) w.join();

      BenchRow row;
      row.loss = softmax ? "softmax" : "sphereface2";
      row.shards = s_count;
      row.num_classes = num_classes;
      row.dim = dim;
      row.batch = batch;
      row.steps_per_sec = static_cast<double>(reps) / std::max(elapsed_sec, 1e-9);
      row.stats.feature_broadcast_scalars = dim * s_count;
      row.stats.remote_weight_scalars_read = 0;  // disjoint contiguous row blocks
      row.stats.normalizer_exchange_scalars = softmax && s_count > 1 ? 2 * s_count : 0;
      row.stats.reduction_scalars = s_count + dim * s_count;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace sf2
