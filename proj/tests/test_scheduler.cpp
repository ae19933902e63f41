// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "curio/errors.hpp"
#include "curio/scheduler.hpp"
#include "support.hpp"

using namespace curio;
namespace ct = curio::testing;

namespace {

std::vector<LabeledId> same_bucket(std::size_t n, const Bucket& b, const std::string& prefix = "x") {
  std::vector<LabeledId> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({prefix + std::to_string(i), b});
  return out;
}

const Bucket& square(BaseTier t) { return canonical_table()[static_cast<std::size_t>(t) * 9 + 4]; }

std::vector<std::vector<LabeledId>> labeled_partition(const Manifest& m, int world, std::uint64_t seed) {
  const auto p = partition(m, world, seed, 0);
  std::vector<std::vector<LabeledId>> out;
  for (const auto& ids : p.ranks) out.push_back(label_ids(m, ids));
  return out;
}

}  // namespace

TEST_SUITE("scheduler") {
  TEST_CASE("partition examples") {
    SplitMix64 rng(1);
    const auto m = ct::random_manifest(rng, 10);
    const auto one = partition(m, 1, 5, 0);
    CHECK(one.ranks[0].size() == 10);
    CHECK(one.dropped.empty());
    const auto three = partition(m, 3, 5, 0);
    for (const auto& r : three.ranks) CHECK(r.size() == 3);
    CHECK(three.dropped.size() == 1);
    CHECK(partition(m, 3, 5, 0).ranks == three.ranks);
    CHECK(partition(m, 3, 6, 0).ranks != three.ranks);
    CHECK(partition(m, 3, 5, 1).ranks != three.ranks);
    CHECK_THROWS_AS(partition(m, 0, 5, 0), ConfigError);
  }

  TEST_CASE("partitions are disjoint and cover all but a remainder") {
    SplitMix64 rng(2);
    for (int trial = 0; trial < 40; ++trial) {
      const auto n = static_cast<std::size_t>(rng.below(10001));
      const auto m = ct::random_manifest(rng, n);
      const int w = 1 + static_cast<int>(rng.below(8));
      const auto p = partition(m, w, rng(), rng.below(10));
      std::set<std::string> seen;
      std::size_t total = 0;
      for (const auto& r : p.ranks) {
        REQUIRE(r.size() == n / static_cast<std::size_t>(w));
        for (const auto& id : r) REQUIRE(seen.insert(id).second);
        total += r.size();
      }
      for (const auto& id : p.dropped) REQUIRE(seen.insert(id).second);
      REQUIRE(p.dropped.size() < static_cast<std::size_t>(w));
      REQUIRE(seen.size() == n);
      REQUIRE(total + p.dropped.size() == n);
    }
  }

  TEST_CASE("batch sizes and costs") {
    CHECK(batch_size_for(BaseTier::Base512) == 24);
    CHECK(batch_size_for(BaseTier::Base768) == 10);
    CHECK(batch_size_for(BaseTier::Base1024) == 6);
    CHECK(step_cost(square(BaseTier::Base512), 24) == 24576.0);
    CHECK(step_cost(square(BaseTier::Base768), 10) == 23040.0);
    CHECK(step_cost(square(BaseTier::Base1024), 6) == 24576.0);
    CHECK(step_cost(square(BaseTier::Base512), 2, {2.0, 5.0}) == 2.0 * 1024 * 1024 + 5.0);
    CHECK_THROWS_AS((CostModel{0.5, 0}.validate()), ConfigError);
    CHECK_THROWS_AS((TierBatchSizes{{24, 0, 6}}.validate()), ConfigError);
  }

  TEST_CASE("batching examples") {
    PlanOptions o;
    const auto b = square(BaseTier::Base512);
    auto plan = plan_epoch({same_bucket(48, b)}, o);
    CHECK(plan.ranks[0].size() == 2);
    CHECK(plan.dropped_per_rank[0] == 0);
    plan = plan_epoch({same_bucket(25, b)}, o);
    CHECK(plan.ranks[0].size() == 1);
    CHECK(plan.dropped_per_rank[0] == 1);
    plan = plan_epoch({{}}, o);
    CHECK(plan.ranks[0].empty());
    CHECK(plan_epoch({}, o).ranks.empty());
  }

  TEST_CASE("imbalance examples") {
    PlanOptions o;
    const auto p512 = square(BaseTier::Base512), p768 = square(BaseTier::Base768), p1024 = square(BaseTier::Base1024);
    auto rep = imbalance_report(plan_epoch({same_bucket(48, p512, "a"), same_bucket(48, p512, "b")}, o));
    CHECK(rep.steps == 2);
    CHECK(rep.max_ratio == 1.0);
    rep = imbalance_report(plan_epoch({same_bucket(24, p512), same_bucket(6, p1024)}, o));
    CHECK(rep.step_ratios == std::vector<double>{1.0});
    rep = imbalance_report(plan_epoch({same_bucket(24, p512), same_bucket(10, p768)}, o));
    CHECK(rep.max_ratio == doctest::Approx(24576.0 / 23040.0).epsilon(1e-15));
  }

  TEST_CASE("tier selection") {
    CHECK(select_tier(2000, 2000) == BaseTier::Base1024);
    CHECK(select_tier(800, 800) == BaseTier::Base768);
    CHECK(select_tier(600, 600) == BaseTier::Base512);
    CHECK(select_tier(100, 100) == BaseTier::Base512);  // nothing fits without upscaling
    CHECK(select_tier(2000, 2000, {BaseTier::Base512}) == BaseTier::Base512);
    Manifest m;
    ImageRecord r;
    r.id = "a";
    r.width = 1600;
    r.height = 900;
    m.records.push_back(r);
    const auto l = label_ids(m, {"a"});
    CHECK(l[0].bucket.label() == "1376x768");
    CHECK_THROWS_AS(label_ids(m, {"missing"}), IntegrityError);
  }

  TEST_CASE("plans are bucket-homogeneous with exact batch sizes and cover their ids") {
    SplitMix64 rng(3);
    for (auto mode : {SyncMode::Independent, SyncMode::Synchronized}) {
      for (int world = 1; world <= 8; ++world) {
        const auto m = ct::random_manifest(rng, 1000);
        const auto per_rank = labeled_partition(m, world, rng());
        PlanOptions o;
        o.mode = mode;
        o.seed = rng();
        const auto plan = plan_epoch(per_rank, o);
        REQUIRE(plan.ranks.size() == static_cast<std::size_t>(world));
        for (std::size_t r = 0; r < plan.ranks.size(); ++r) {
          std::map<std::string, Bucket> label;
          for (const auto& l : per_rank[r]) label.emplace(l.id, l.bucket);
          std::set<std::string> used;
          for (std::size_t s = 0; s < plan.ranks[r].size(); ++s) {
            const auto& b = plan.ranks[r][s];
            REQUIRE(b.rank == static_cast<int>(r));
            REQUIRE(b.step == s);
            REQUIRE(b.ids.size() == static_cast<std::size_t>(o.sizes[b.bucket.tier]));
            for (const auto& id : b.ids) {
              REQUIRE(label.at(id) == b.bucket);
              REQUIRE(used.insert(id).second);
            }
          }
          REQUIRE(used.size() + plan.dropped_per_rank[r] == per_rank[r].size());
        }
        if (mode == SyncMode::Synchronized) {
          for (std::size_t s = 0; s < plan.ranks[0].size(); ++s)
            for (const auto& rank : plan.ranks) {
              REQUIRE(rank.size() == plan.ranks[0].size());
              REQUIRE(rank[s].bucket.tier == plan.ranks[0][s].bucket.tier);
            }
        }
      }
    }
  }

  TEST_CASE("plans are reproducible and independent of the worker count") {
    SplitMix64 rng(4);
    const auto m = ct::random_manifest(rng, 1000);
    for (auto mode : {SyncMode::Independent, SyncMode::Synchronized}) {
      const auto per_rank = labeled_partition(m, 6, 77);
      PlanOptions o;
      o.mode = mode;
      o.seed = 77;
      const auto base = plan_epoch(per_rank, o);
      CHECK(plan_epoch(per_rank, o) == base);
      for (std::size_t jobs : {2u, 3u, 6u, 16u}) {
        o.jobs = jobs;
        CHECK(plan_epoch(per_rank, o) == base);
      }
      o.jobs = 1;
      o.epoch = 1;
      CHECK_FALSE(plan_epoch(per_rank, o) == base);
    }
  }

  TEST_CASE("plan file layout") {
    SplitMix64 rng(5);
    const auto m = ct::random_manifest(rng, 300);
    const auto per_rank = labeled_partition(m, 2, 9);
    PlanOptions o;
    o.seed = 9;
    const auto plan = plan_epoch(per_rank, o);
    std::ostringstream a, b;
    write_plan(a, plan, o, {}, {});
    write_plan(b, plan, o, {}, {});
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    std::string header;
    std::getline(in, header);
    CHECK(header.find(R"("prng":"splitmix64-v1")") != std::string::npos);
    CHECK(header.find(R"("config_hash":")") != std::string::npos);
    std::size_t lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    CHECK(lines == plan.ranks[0].size() + plan.ranks[1].size());
    PlanOptions other = o;
    other.sizes.sizes[0] = 12;
    CHECK(plan_config_hash(o, {}, {}, 2) != plan_config_hash(other, {}, {}, 2));
  }
}
