// SPDX-License-Identifier: Apache-2.0
#include "curio/embedding_store.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "curio/errors.hpp"
#include "curio/rng.hpp"

namespace curio {

namespace {

constexpr std::array<char, 4> kMagic{'L', 'N', 'S', 'E'};

template <class T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> buf;
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(buf.data(), buf.size());
}

template <class T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> buf;
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size()))
    throw DataError(std::string("embedding store truncated while reading ") + what);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

void EmbeddingStore::append(std::uint64_t id_hash, const Eigen::Ref<const Eigen::VectorXf>& v) {
  if (dimension == 0) throw ContractError("embedding store dimension not set");
  if (v.size() != static_cast<Eigen::Index>(dimension)) throw ContractError("embedding dimension mismatch");
  if (!v.allFinite()) throw ContractError("embedding contains non-finite values");
  values.insert(values.end(), v.data(), v.data() + v.size());
  id_hashes.push_back(id_hash);
}

std::uint64_t embedding_id_hash(std::string_view record_id) noexcept { return fnv1a64(record_id); }

void write_embedding_store(std::ostream& out, const EmbeddingStore& store) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, EmbeddingStore::kVersion);
  put_le<std::uint32_t>(out, store.dimension);
  put_le<std::uint64_t>(out, store.id_hashes.size());
  for (std::size_t i = 0; i < store.id_hashes.size(); ++i) {
    put_le<std::uint64_t>(out, store.id_hashes[i]);
    for (std::uint32_t d = 0; d < store.dimension; ++d) put_le<float>(out, store.values[i * store.dimension + d]);
  }
  if (!out) throw DataError("failed writing embedding store");
}

void write_embedding_store(const std::filesystem::path& path, const EmbeddingStore& store) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write embedding store " + path.string());
  write_embedding_store(out, store);
}

EmbeddingStore read_embedding_store(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw DataError("not an LNSE embedding store");
  auto version = get_le<std::uint32_t>(in, "version");
  if (version != EmbeddingStore::kVersion)
    throw DataError("unsupported embedding store version " + std::to_string(version));
  EmbeddingStore store;
  store.dimension = get_le<std::uint32_t>(in, "dimension");
  auto count = get_le<std::uint64_t>(in, "count");
  if (store.dimension == 0 && count > 0) throw DataError("embedding store has zero dimension");
  // Bound the allocation by what the stream can actually hold when it is seekable.
  if (auto here = in.tellg(); here != std::streampos(-1)) {
    in.seekg(0, std::ios::end);
    auto end = in.tellg();
    in.seekg(here);
    const auto record_bytes = 8ULL + 4ULL * store.dimension;
    if (static_cast<unsigned long long>(end - here) < count * record_bytes)
      throw DataError("embedding store truncated: header claims " + std::to_string(count) + " records");
  }
  store.id_hashes.resize(count);
  store.values.resize(count * store.dimension);
  for (std::uint64_t i = 0; i < count; ++i) {
    store.id_hashes[i] = get_le<std::uint64_t>(in, "id hash");
    for (std::uint32_t d = 0; d < store.dimension; ++d) {
      float v = get_le<float>(in, "vector");
      if (!std::isfinite(v)) throw DataError("embedding " + std::to_string(i) + " has a non-finite value");
      store.values[i * store.dimension + d] = v;
    }
  }
  return store;
}

EmbeddingStore read_embedding_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding store " + path.string());
  return read_embedding_store(in);
}

}  // namespace curio
