// SPDX-License-Identifier: Apache-2.0
#include "curio/buckets.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "curio/errors.hpp"

namespace curio {

namespace {

// Transcribed, not generated: no single rounding rule reproduces every entry.
constexpr std::array<std::array<std::array<int, 2>, 9>, 3> kTable{{
    {{{352, 704}, {384, 672}, {416, 640}, {448, 608}, {512, 512}, {608, 448}, {640, 416}, {672, 384}, {704, 352}}},
    {{{544, 1088}, {576, 1024}, {640, 960}, {672, 896}, {768, 768}, {896, 672}, {960, 640}, {1024, 576}, {1088, 544}}},
    {{{736, 1472}, {768, 1376}, {832, 1248}, {864, 1152}, {1024, 1024}, {1152, 864}, {1248, 832}, {1376, 768}, {1472, 736}}},
}};

BucketTable build_table() {
  BucketTable t;
  t.reserve(27);
  for (std::size_t ti = 0; ti < kAllTiers.size(); ++ti)
    for (std::size_t ai = 0; ai < kAspectRatios.size(); ++ai)
      t.push_back(Bucket{kAllTiers[ti], kAspectRatios[ai], kTable[ti][ai][0], kTable[ti][ai][1]});
  return t;
}

}  // namespace

std::string_view tier_name(BaseTier t) noexcept {
  switch (t) {
    case BaseTier::Base512: return "512";
    case BaseTier::Base768: return "768";
    case BaseTier::Base1024: return "1024";
  }
  return "512";
}

std::optional<BaseTier> parse_tier(std::string_view s) noexcept {
  for (auto t : kAllTiers)
    if (tier_name(t) == s) return t;
  return std::nullopt;
}

std::string Bucket::label() const { return std::to_string(width) + "x" + std::to_string(height); }

const BucketTable& canonical_table() {
  static const BucketTable table = [] {
    auto t = build_table();
    validate_table(t);
    return t;
  }();
  return table;
}

void validate_table(const BucketTable& table) {
  if (table.size() != 27) throw ContractError("bucket table must hold 27 entries");
  for (auto tier : kAllTiers) {
    std::set<std::pair<int, int>> aspects;
    for (const auto& b : table) {
      if (b.tier != tier) continue;
      if (b.width % 32 != 0 || b.height % 32 != 0) throw ContractError("bucket " + b.label() + " is not a multiple of 32");
      const double rel = static_cast<double>(b.width) * b.height / static_cast<double>(base_area(tier)) - 1.0;
      if (std::abs(rel) > 0.06) throw ContractError("bucket " + b.label() + " area deviates more than 6% from its tier");
      aspects.insert({b.aspect.w, b.aspect.h});
    }
    if (aspects.size() != kAspectRatios.size())
      throw ContractError("tier " + std::string(tier_name(tier)) + " does not cover the nine aspect ratios");
  }
}

Bucket generate_bucket(std::int64_t area, AspectRatio aspect, BaseTier tier_label) {
  const double a = aspect.value();
  const auto snap = [](double v) { return static_cast<int>(std::lround(v / 32.0)) * 32; };
  Bucket b{tier_label, aspect, snap(std::sqrt(static_cast<double>(area) * a)),
           snap(std::sqrt(static_cast<double>(area) / a))};
  b.width = std::max(b.width, 32);
  b.height = std::max(b.height, 32);
  return b;
}

Bucket assign_bucket(std::int64_t width, std::int64_t height, BaseTier tier, const BucketTable& table) {
  if (width < 1 || height < 1) throw ContractError("assign_bucket: dimensions must be >= 1");
  const double target = std::log(static_cast<double>(width) / static_cast<double>(height));
  const Bucket* best = nullptr;
  double best_d = 0.0;
  for (const auto& b : table) {
    if (b.tier != tier) continue;
    const double d = std::abs(target - std::log(b.aspect.value()));
    const bool better = !best || d < best_d - 1e-12 ||
                        (std::abs(d - best_d) <= 1e-12 && b.aspect.value() > best->aspect.value());
    if (better) {
      best = &b;
      best_d = d;
    }
  }
  if (!best) throw ContractError("bucket table has no entries for tier " + std::string(tier_name(tier)));
  return *best;
}

CropPlan crop_plan(std::int64_t native_width, std::int64_t native_height, const Bucket& bucket) {
  if (native_width < 1 || native_height < 1) throw ContractError("crop_plan: dimensions must be >= 1");
  CropPlan p;
  p.scale = std::max(static_cast<double>(bucket.width) / static_cast<double>(native_width),
                     static_cast<double>(bucket.height) / static_cast<double>(native_height));
  p.scaled_width = std::max<std::int64_t>(bucket.width, std::llround(static_cast<double>(native_width) * p.scale));
  p.scaled_height = std::max<std::int64_t>(bucket.height, std::llround(static_cast<double>(native_height) * p.scale));
  p.crop = {(p.scaled_width - bucket.width) / 2, (p.scaled_height - bucket.height) / 2, bucket.width, bucket.height};
  return p;
}

std::int64_t token_count(int width, int height) {
  if (width <= 0 || height <= 0 || width % kPatchSize != 0 || height % kPatchSize != 0)
    throw ContractError("token_count: " + std::to_string(width) + "x" + std::to_string(height) +
                        " is not a positive multiple of " + std::to_string(kPatchSize));
  return std::int64_t{width / kPatchSize} * (height / kPatchSize);
}

std::string table_to_json(const BucketTable& table, int indent) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& b : table) {
    nlohmann::ordered_json e;
    e["base"] = base_side(b.tier);
    e["aspect"] = std::to_string(b.aspect.w) + ":" + std::to_string(b.aspect.h);
    e["width"] = b.width;
    e["height"] = b.height;
    j.push_back(std::move(e));
  }
  return j.dump(indent);
}

}  // namespace curio
