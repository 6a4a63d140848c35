#pragma once

#include <string>
#include <vector>

#include "sf2/classifier_bank.hpp"
#include "sf2/losses.hpp"
#include "sf2/types.hpp"

namespace sf2 {

// Contiguous class ranges partitioning [0,K).
struct ShardPlan {
  std::vector<std::pair<Index, Index>> ranges;  // [begin, end)

  static ShardPlan contiguous(Index num_classes, Index num_shards);

  Index num_shards() const { return static_cast<Index>(ranges.size()); }
  Index num_classes() const { return ranges.empty() ? 0 : ranges.back().second; }
  Index owner(Index cls) const;
  void validate() const;
};

// Communication cost of one sharded classifier step, in scalars. Feature
// broadcast and reduction counts model the distributed protocol (x out to
// every shard; one partial loss + one partial feature gradient back); remote
// weight reads are measured through the instrumented accessor.
struct CommStats {
  long long feature_broadcast_scalars = 0;
  long long remote_weight_scalars_read = 0;
  long long normalizer_exchange_scalars = 0;
  long long reduction_scalars = 0;

  CommStats& operator+=(const CommStats& o) {
    feature_broadcast_scalars += o.feature_broadcast_scalars;
    remote_weight_scalars_read += o.remote_weight_scalars_read;
    normalizer_exchange_scalars += o.normalizer_exchange_scalars;
    reduction_scalars += o.reduction_scalars;
    return *this;
  }
};

// Weight table guarded by shard ownership: every read names the reading
// shard, and scalars pulled from a row the shard does not own are counted.
class InstrumentedWeights {
 public:
  InstrumentedWeights(const Matrix& weights, const ShardPlan& plan);

  Vector row(Index shard, Index cls) const;
  long long remote_scalars(Index shard) const {
    return remote_reads_[static_cast<std::size_t>(shard)];
  }

 private:
  const Matrix& weights_;
  const ShardPlan& plan_;
  mutable std::vector<long long> remote_reads_;
};

struct ShardedStepResult {
  LossGradients grads;
  CommStats totals;
  std::vector<CommStats> per_shard;
};

// One classifier-layer step of the final loss with the classes partitioned
// across shards. Each shard touches only its own weight rows; the
// coordinator merges per-class terms in class order, so the merged value and
// gradients are bitwise identical to the unsharded
// loss_final + chain_through_bank path for any partition.
ShardedStepResult sharded_step_sphereface2(const Eigen::Ref<const Vector>& x, Index y,
                                           const ShardPlan& plan,
                                           const ClassifierBank& bank,
                                           const Hyperparams& hp, double bias);

// Softmax baseline under the same partitioning. The normalizer forces a
// two-phase exchange (global max, then partial exp sums): 2 scalars per shard
// when S > 1. Merged gradients match the unsharded loss_softmax to ~1e-12.
ShardedStepResult sharded_step_softmax(const Eigen::Ref<const Vector>& x, Index y,
                                       const ShardPlan& plan, const ClassifierBank& bank,
                                       double scale, double margin = 0.0);

struct BenchRow {
  std::string loss;
  Index shards = 1;
  Index num_classes = 0;
  Index dim = 0;
  Index batch = 1;
  double steps_per_sec = 0.0;
  CommStats stats;
};

// Wall-clock classifier-layer training throughput with S worker threads per
// row, for both losses. Deterministic numerics, nondeterministic timing.
std::vector<BenchRow> throughput_bench(Index num_classes, Index dim,
                                       const std::vector<Index>& shard_counts,
                                       Index batch, Index reps, std::uint64_t seed);

}  // namespace sf2
