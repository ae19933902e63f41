// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace curio {

/// Flat little-endian embedding file:
///   "LNSE" | u32 version | u32 dimension | u64 count | count x (u64 id-hash, dim x f32)
struct EmbeddingStore {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t dimension = 0;
  std::vector<std::uint64_t> id_hashes;
  /// Column-major payload, one column of `dimension` floats per embedding.
  std::vector<float> values;

  std::size_t size() const noexcept { return id_hashes.size(); }

  /// dimension x count view over `values`.
  Eigen::Map<const Eigen::MatrixXf> matrix() const noexcept {
    return {values.data(), static_cast<Eigen::Index>(dimension), static_cast<Eigen::Index>(size())};
  }
  Eigen::Map<const Eigen::VectorXf> vector(std::size_t i) const noexcept {
    return {values.data() + i * dimension, static_cast<Eigen::Index>(dimension)};
  }

  /// Appends one embedding; throws ContractError on a dimension mismatch or non-finite value.
  void append(std::uint64_t id_hash, const Eigen::Ref<const Eigen::VectorXf>& v);
};

/// Hash stored alongside each vector, FNV-1a 64 over the record id's UTF-8 bytes.
std::uint64_t embedding_id_hash(std::string_view record_id) noexcept;

void write_embedding_store(std::ostream& out, const EmbeddingStore& store);
void write_embedding_store(const std::filesystem::path& path, const EmbeddingStore& store);
EmbeddingStore read_embedding_store(std::istream& in);
EmbeddingStore read_embedding_store(const std::filesystem::path& path);

}  // namespace curio
