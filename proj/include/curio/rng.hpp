// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace curio {

/// SplitMix64 (Steele, Lea & Flood). Output is fully specified, so seeded
/// shuffles reproduce bit-for-bit across compilers and standard libraries,
/// unlike std::shuffle / std::uniform_int_distribution.
class SplitMix64 {
public:
  using result_type = std::uint64_t;
  static constexpr std::string_view kName = "splitmix64-v1";

  explicit constexpr SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  constexpr result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  /// Independent child stream keyed by `key`; the parent state is untouched.
  constexpr SplitMix64 split(std::uint64_t key) const noexcept {
    SplitMix64 tmp(state_ ^ (key * 0xD1B54A32D192ED03ULL));
    return SplitMix64(tmp());
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x = (*this)();
    while (x >= limit) x = (*this)();
    return x % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double unit() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

/// Fisher-Yates shuffle driven by SplitMix64::below.
template <class T>
void seeded_shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

/// Stream for (seed, epoch, purpose, rank) with no correlation between the tuple members.
inline SplitMix64 derive_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t purpose,
                                std::uint64_t rank = 0) {
  return SplitMix64(seed).split(epoch).split(purpose).split(rank);
}

/// FNV-1a 64-bit; used for record id hashes and asset checksums.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace curio
