// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "curio/buckets.hpp"
#include "curio/manifest.hpp"

namespace curio {

struct RankLayout {
  int rank = 0;
  int world_size = 1;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  void validate() const;
};

/// Samples per batch for each base tier (512^2, 768^2, 1024^2).
struct TierBatchSizes {
  std::array<int, 3> sizes{24, 10, 6};
  int operator[](BaseTier t) const noexcept { return sizes[static_cast<std::size_t>(t)]; }
  void validate() const;
};

int batch_size_for(BaseTier tier, const TierBatchSizes& sizes = {});

/// Per-step cost = batch * tokens^exponent + overhead.
struct CostModel {
  double exponent = 1.0;
  double overhead = 0.0;
  void validate() const;
};

double step_cost(const Bucket& bucket, int batch, const CostModel& cm = {});

struct Partition {
  std::vector<std::vector<std::string>> ranks;  // pairwise disjoint
  std::vector<std::string> dropped;             // fewer than world_size ids
};

/// Seeded permutation of all ids split into equal contiguous shares; the
/// N mod world_size tail of the permutation is dropped for the epoch.
Partition partition(const Manifest& m, int world_size, std::uint64_t seed, std::uint64_t epoch);

/// How each sample picks its base tier before bucket assignment.
struct TierPolicy {
  /// When set, every sample uses this tier. Otherwise: the largest tier whose bucket
  /// is reachable without upscaling (cover scale <= 1), else the smallest tier.
  std::optional<BaseTier> fixed;
};

BaseTier select_tier(std::int64_t width, std::int64_t height, const TierPolicy& policy = {},
                     const BucketTable& table = canonical_table());

struct LabeledId {
  std::string id;
  Bucket bucket;
};

/// Bucket labels for the given ids, looked up in the manifest.
std::vector<LabeledId> label_ids(const Manifest& m, const std::vector<std::string>& ids, const TierPolicy& policy = {});

struct BatchPlan {
  int rank = 0;
  std::size_t step = 0;
  Bucket bucket;
  std::vector<std::string> ids;
  bool operator==(const BatchPlan&) const = default;
};

enum class SyncMode {
  Independent,   // each rank orders its own batches
  Synchronized,  // all ranks use the same base tier at every step
};

struct EpochPlan {
  std::vector<std::vector<BatchPlan>> ranks;
  /// Ids left out of full batches (tail batches, or tiers exhausted on some rank in synchronized mode).
  std::vector<std::size_t> dropped_per_rank;
  bool operator==(const EpochPlan&) const = default;
};

struct PlanOptions {
  TierBatchSizes sizes;
  SyncMode mode = SyncMode::Independent;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::size_t jobs = 1;
};

/// Groups each rank's ids into full bucket-homogeneous batches in a seeded order.
/// A pure function of (inputs, options); `jobs` never changes the result.
EpochPlan plan_epoch(const std::vector<std::vector<LabeledId>>& per_rank, const PlanOptions& options);

struct ImbalanceReport {
  std::vector<double> step_ratios;  // max/min rank cost at each aligned step
  double max_ratio = 1.0;
  double mean_ratio = 1.0;
  std::size_t steps = 0;
};

/// Aligns ranks on the shortest plan (longer plans are truncated).
ImbalanceReport imbalance_report(const EpochPlan& plan, const TierBatchSizes& sizes = {}, const CostModel& cm = {});

/// Plan file: header line then one BatchPlan per line, step-major, rank ascending.
void write_plan(std::ostream& out, const EpochPlan& plan, const PlanOptions& options, const CostModel& cm,
                const TierPolicy& policy);
std::string plan_config_hash(const PlanOptions& options, const CostModel& cm, const TierPolicy& policy,
                             std::size_t world_size);

}  // namespace curio
