// SPDX-License-Identifier: Apache-2.0
#include "curio/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "curio/errors.hpp"
#include "curio/rng.hpp"

namespace curio {

namespace {

// Stream purposes for derive_stream.
enum : std::uint64_t { kPartitionStream = 1, kGroupStream = 2, kOrderStream = 3, kSyncStream = 4 };

std::size_t bucket_slot(const Bucket& b) {
  const auto& table = canonical_table();
  for (std::size_t i = 0; i < table.size(); ++i)
    if (table[i] == b) return i;
  throw ContractError("bucket " + b.label() + " is not in the canonical table");
}

// Full batches of one rank grouped by bucket, each group shuffled, tails dropped.
struct RankBatches {
  std::vector<BatchPlan> batches;
  std::size_t dropped = 0;
};

RankBatches make_batches(int rank, const std::vector<LabeledId>& ids, const PlanOptions& o) {
  std::vector<std::vector<std::string>> groups(canonical_table().size());
  for (const auto& l : ids) groups[bucket_slot(l.bucket)].push_back(l.id);

  RankBatches out;
  auto rng = derive_stream(o.seed, o.epoch, kGroupStream, static_cast<std::uint64_t>(rank));
  for (std::size_t slot = 0; slot < groups.size(); ++slot) {
    auto& g = groups[slot];
    if (g.empty()) continue;
    seeded_shuffle(std::span<std::string>(g), rng);
    const auto& bucket = canonical_table()[slot];
    const auto size = static_cast<std::size_t>(o.sizes[bucket.tier]);
    const std::size_t full = g.size() / size;
    for (std::size_t b = 0; b < full; ++b) {
      BatchPlan p;
      p.rank = rank;
      p.bucket = bucket;
      p.ids.assign(std::make_move_iterator(g.begin() + static_cast<std::ptrdiff_t>(b * size)),
                   std::make_move_iterator(g.begin() + static_cast<std::ptrdiff_t>((b + 1) * size)));
      out.batches.push_back(std::move(p));
    }
    out.dropped += g.size() - full * size;
  }
  return out;
}

template <class Fn>
void for_each_rank(std::size_t ranks, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, ranks));
  if (jobs == 1) {
    for (std::size_t r = 0; r < ranks; ++r) fn(r);
    return;
  }
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&, w] {
      for (std::size_t r = w; r < ranks; r += jobs) fn(r);
    });
}

}  // namespace

void RankLayout::validate() const {
  if (world_size < 1) throw ConfigError("world-size must be >= 1");
  if (rank < 0 || rank >= world_size) throw ConfigError("rank must lie in [0, world-size)");
}

void TierBatchSizes::validate() const {
  for (int s : sizes)
    if (s < 1) throw ConfigError("batch sizes must be positive");
}

int batch_size_for(BaseTier tier, const TierBatchSizes& sizes) { return sizes[tier]; }

void CostModel::validate() const {
  if (!std::isfinite(exponent) || exponent < 1.0) throw ConfigError("cost exponent must be >= 1");
  if (!std::isfinite(overhead) || overhead < 0.0) throw ConfigError("step overhead must be nonnegative");
}

double step_cost(const Bucket& bucket, int batch, const CostModel& cm) {
  return static_cast<double>(batch) * std::pow(static_cast<double>(token_count(bucket)), cm.exponent) + cm.overhead;
}

Partition partition(const Manifest& m, int world_size, std::uint64_t seed, std::uint64_t epoch) {
  if (world_size < 1) throw ConfigError("world-size must be >= 1");
  std::vector<std::size_t> perm(m.records.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = derive_stream(seed, epoch, kPartitionStream);
  seeded_shuffle(std::span<std::size_t>(perm), rng);

  const auto w = static_cast<std::size_t>(world_size);
  const std::size_t share = perm.size() / w;
  Partition p;
  p.ranks.resize(w);
  for (std::size_t r = 0; r < w; ++r)
    for (std::size_t k = r * share; k < (r + 1) * share; ++k) p.ranks[r].push_back(m.records[perm[k]].id);
  for (std::size_t k = w * share; k < perm.size(); ++k) p.dropped.push_back(m.records[perm[k]].id);
  return p;
}

BaseTier select_tier(std::int64_t width, std::int64_t height, const TierPolicy& policy, const BucketTable& table) {
  if (policy.fixed) return *policy.fixed;
  for (auto it = kAllTiers.rbegin(); it != kAllTiers.rend(); ++it) {
    const auto bucket = assign_bucket(width, height, *it, table);
    if (crop_plan(width, height, bucket).scale <= 1.0) return *it;
  }
  return BaseTier::Base512;
}

std::vector<LabeledId> label_ids(const Manifest& m, const std::vector<std::string>& ids, const TierPolicy& policy) {
  std::unordered_map<std::string_view, const ImageRecord*> by_id;
  for (const auto& r : m.records) by_id.emplace(r.id, &r);
  std::vector<LabeledId> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw IntegrityError("id \"" + id + "\" not in manifest");
    const auto& r = *it->second;
    out.push_back({id, assign_bucket(r.width, r.height, select_tier(r.width, r.height, policy))});
  }
  return out;
}

EpochPlan plan_epoch(const std::vector<std::vector<LabeledId>>& per_rank, const PlanOptions& options) {
  options.sizes.validate();
  const std::size_t ranks = per_rank.size();
  std::vector<RankBatches> built(ranks);
  for_each_rank(ranks, options.jobs,
                [&](std::size_t r) { built[r] = make_batches(static_cast<int>(r), per_rank[r], options); });

  EpochPlan plan;
  plan.ranks.resize(ranks);
  plan.dropped_per_rank.resize(ranks);
  for (std::size_t r = 0; r < ranks; ++r) plan.dropped_per_rank[r] = built[r].dropped;

  if (options.mode == SyncMode::Independent) {
    for_each_rank(ranks, options.jobs, [&](std::size_t r) {
      auto& batches = built[r].batches;
      auto rng = derive_stream(options.seed, options.epoch, kOrderStream, r);
      seeded_shuffle(std::span<BatchPlan>(batches), rng);
      for (std::size_t s = 0; s < batches.size(); ++s) batches[s].step = s;
      plan.ranks[r] = std::move(batches);
    });
    return plan;
  }

  // Synchronized: per rank and tier, a shuffled queue of batches; one shared stream
  // picks the tier for each step among tiers every rank can still serve.
  std::vector<std::array<std::vector<BatchPlan>, 3>> queues(ranks);
  for (std::size_t r = 0; r < ranks; ++r) {
    auto& batches = built[r].batches;
    auto rng = derive_stream(options.seed, options.epoch, kOrderStream, r);
    seeded_shuffle(std::span<BatchPlan>(batches), rng);
    // Reverse so pop_back serves batches in shuffled order.
    for (auto it = batches.rbegin(); it != batches.rend(); ++it)
      queues[r][static_cast<std::size_t>(it->bucket.tier)].push_back(std::move(*it));
  }
  auto shared = derive_stream(options.seed, options.epoch, kSyncStream);
  for (std::size_t step = 0; ranks > 0; ++step) {
    std::vector<std::size_t> candidates;
    for (std::size_t t = 0; t < 3; ++t) {
      bool all = true;
      for (std::size_t r = 0; r < ranks && all; ++r) all = !queues[r][t].empty();
      if (all) candidates.push_back(t);
    }
    if (candidates.empty()) break;
    const auto tier = candidates[static_cast<std::size_t>(shared.below(candidates.size()))];
    for (std::size_t r = 0; r < ranks; ++r) {
      auto b = std::move(queues[r][tier].back());
      queues[r][tier].pop_back();
      b.step = step;
      plan.ranks[r].push_back(std::move(b));
    }
  }
  for (std::size_t r = 0; r < ranks; ++r)
    for (const auto& q : queues[r])
      for (const auto& b : q) plan.dropped_per_rank[r] += b.ids.size();
  return plan;
}

ImbalanceReport imbalance_report(const EpochPlan& plan, const TierBatchSizes& sizes, const CostModel& cm) {
  ImbalanceReport rep;
  if (plan.ranks.empty()) return rep;
  std::size_t steps = plan.ranks.front().size();
  for (const auto& r : plan.ranks) steps = std::min(steps, r.size());
  rep.steps = steps;
  double sum = 0.0;
  rep.max_ratio = steps > 0 ? 0.0 : 1.0;
  for (std::size_t s = 0; s < steps; ++s) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t r = 0; r < plan.ranks.size(); ++r) {
      const auto& b = plan.ranks[r][s];
      const double c = step_cost(b.bucket, sizes[b.bucket.tier], cm);
      lo = r == 0 ? c : std::min(lo, c);
      hi = r == 0 ? c : std::max(hi, c);
    }
    const double ratio = hi / lo;
    rep.step_ratios.push_back(ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    sum += ratio;
  }
  rep.mean_ratio = steps > 0 ? sum / static_cast<double>(steps) : 1.0;
  return rep;
}

std::string plan_config_hash(const PlanOptions& options, const CostModel& cm, const TierPolicy& policy,
                             std::size_t world_size) {
  nlohmann::ordered_json j;
  j["sizes"] = options.sizes.sizes;
  j["mode"] = options.mode == SyncMode::Independent ? "independent" : "synchronized";
  j["cost_exponent"] = cm.exponent;
  j["cost_overhead"] = cm.overhead;
  j["tier"] = policy.fixed ? std::string(tier_name(*policy.fixed)) : std::string("auto");
  j["world_size"] = world_size;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

void write_plan(std::ostream& out, const EpochPlan& plan, const PlanOptions& options, const CostModel& cm,
                const TierPolicy& policy) {
  nlohmann::ordered_json header;
  header["seed"] = options.seed;
  header["epoch"] = options.epoch;
  header["world_size"] = plan.ranks.size();
  header["mode"] = options.mode == SyncMode::Independent ? "independent" : "synchronized";
  header["config_hash"] = plan_config_hash(options, cm, policy, plan.ranks.size());
  header["prng"] = std::string(SplitMix64::kName);
  out << nlohmann::ordered_json{{"header", header}}.dump() << '\n';

  std::size_t longest = 0;
  for (const auto& r : plan.ranks) longest = std::max(longest, r.size());
  for (std::size_t s = 0; s < longest; ++s) {
    for (const auto& r : plan.ranks) {
      if (s >= r.size()) continue;
      const auto& b = r[s];
      nlohmann::ordered_json line;
      line["rank"] = b.rank;
      line["step"] = b.step;
      line["bucket"] = {{"base", base_side(b.bucket.tier)},
                        {"aspect", std::to_string(b.bucket.aspect.w) + ":" + std::to_string(b.bucket.aspect.h)},
                        {"width", b.bucket.width},
                        {"height", b.bucket.height}};
      line["ids"] = b.ids;
      out << line.dump() << '\n';
    }
  }
}

}  // namespace curio
