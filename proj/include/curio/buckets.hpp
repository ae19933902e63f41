// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace curio {

enum class BaseTier : std::uint8_t { Base512, Base768, Base1024 };

inline constexpr std::array<BaseTier, 3> kAllTiers{BaseTier::Base512, BaseTier::Base768, BaseTier::Base1024};

/// Side length of the tier's nominal square (512, 768, 1024).
constexpr int base_side(BaseTier t) noexcept { return t == BaseTier::Base512 ? 512 : t == BaseTier::Base768 ? 768 : 1024; }
constexpr std::int64_t base_area(BaseTier t) noexcept { return std::int64_t{base_side(t)} * base_side(t); }
std::string_view tier_name(BaseTier t) noexcept;  // "512", "768", "1024"
std::optional<BaseTier> parse_tier(std::string_view s) noexcept;

struct AspectRatio {
  int w = 1;
  int h = 1;
  double value() const noexcept { return static_cast<double>(w) / static_cast<double>(h); }
  bool operator==(const AspectRatio&) const = default;
};

/// The nine aspect ratios, narrowest first.
inline constexpr std::array<AspectRatio, 9> kAspectRatios{{{1, 2}, {9, 16}, {2, 3}, {3, 4}, {1, 1}, {4, 3}, {3, 2}, {16, 9}, {2, 1}}};

/// Pixels per latent token side.
inline constexpr int kPatchSize = 16;

struct Bucket {
  BaseTier tier = BaseTier::Base512;
  AspectRatio aspect;
  int width = 0;
  int height = 0;

  std::string label() const;  // e.g. "608x448"
  bool operator==(const Bucket&) const = default;
};

using BucketTable = std::vector<Bucket>;

/// The 27 training buckets, tier-major and narrowest aspect first.
const BucketTable& canonical_table();

/// Throws ContractError unless the table has 27 entries, multiples of 32, areas
/// within 6% of their tier, and each tier covers the nine aspect ratios once.
void validate_table(const BucketTable& table);

/// Candidate bucket for a new tier: multiples of 32 closest to the target area and
/// aspect. Not the source of truth for the canonical table.
Bucket generate_bucket(std::int64_t area, AspectRatio aspect, BaseTier tier_label);

/// The tier's bucket minimizing |log(w/h) - log(aspect)|; ties go to the wider bucket.
Bucket assign_bucket(std::int64_t width, std::int64_t height, BaseTier tier, const BucketTable& table = canonical_table());

struct CropRect {
  std::int64_t x = 0, y = 0, w = 0, h = 0;
  bool operator==(const CropRect&) const = default;
};

/// Cover-scale then center-crop to exactly the bucket size.
struct CropPlan {
  double scale = 1.0;
  std::int64_t scaled_width = 0;
  std::int64_t scaled_height = 0;
  CropRect crop;
};

CropPlan crop_plan(std::int64_t native_width, std::int64_t native_height, const Bucket& bucket);

/// (width/16) * (height/16); throws ContractError if either side is not a multiple of 16.
std::int64_t token_count(int width, int height);
inline std::int64_t token_count(const Bucket& b) { return token_count(b.width, b.height); }

/// Structured export: [{"base":512,"aspect":"4:3","width":608,"height":448}, ...].
std::string table_to_json(const BucketTable& table, int indent = 2);

}  // namespace curio
