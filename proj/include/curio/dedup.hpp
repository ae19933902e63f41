// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "curio/embedding_store.hpp"
#include "curio/errors.hpp"
#include "curio/manifest.hpp"

namespace curio {

/// Near-duplicate threshold: pairs with cosine strictly above it are duplicates.
inline constexpr double kDefaultDupThreshold = 0.985;

/// Unit-norm copy in double precision; throws ContractError on a zero vector.
template <class Derived>
Eigen::VectorXd unit_vector(const Eigen::MatrixBase<Derived>& v) {
  Eigen::VectorXd d = v.template cast<double>();
  const double n = d.norm();
  if (!(n > 0.0)) throw ContractError("cosine similarity undefined for a zero vector");
  return d / n;
}

/// Similarity of two already-normalized vectors, clamped against rounding.
inline double unit_cosine(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  return std::clamp(a.dot(b), -1.0, 1.0);
}

/// dot(a,b) / (|a| |b|) in [-1, 1]. Dimensions must agree and neither vector may be zero.
template <class A, class B>
double cosine(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) throw ContractError("cosine: dimension mismatch");
  return unit_cosine(unit_vector(a), unit_vector(b));
}

/// Outcome of a keep-first duplicate scan over embeddings indexed 0..n-1.
struct DupDecision {
  double threshold = kDefaultDupThreshold;
  /// removed index -> the kept index it duplicates (earliest matching kept record).
  std::map<std::size_t, std::size_t> survivor_map;

  bool removed(std::size_t i) const { return survivor_map.contains(i); }
  std::size_t removed_count() const noexcept { return survivor_map.size(); }
  bool operator==(const DupDecision&) const = default;
};

/// Normalizes every column (dimension x count) to unit length in double precision.
Eigen::MatrixXd normalize_columns(const Eigen::Ref<const Eigen::MatrixXd>& embeddings);

/// Sequential keep-first scan: record i is removed iff some earlier kept record has
/// cosine > threshold; its survivor is the earliest such kept record.
DupDecision dedup_exact(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, double threshold = kDefaultDupThreshold);

struct IvfOptions {
  std::size_t lists = 0;  // 0 selects round(sqrt(count))
  std::size_t probes = 8;
  int kmeans_iterations = 12;
  std::size_t max_training_points = 65536;
  std::uint64_t seed = 0x5EEDu;
};

/// Coarse-quantized inverted lists over unit vectors (spherical k-means centroids).
class IvfIndex {
public:
  IvfIndex(const Eigen::Ref<const Eigen::MatrixXd>& unit_vectors, std::size_t lists, int iterations,
           std::size_t max_training_points, std::uint64_t seed);

  std::size_t list_count() const noexcept { return static_cast<std::size_t>(centroids_.cols()); }
  const Eigen::MatrixXd& centroids() const noexcept { return centroids_; }
  /// Nearest centroid of every indexed vector.
  const std::vector<std::size_t>& assignment() const noexcept { return assignment_; }
  /// Indices of the `probes` centroids most similar to `query`, best first (ties by index).
  std::vector<std::size_t> nearest_lists(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t probes) const;

private:
  Eigen::MatrixXd centroids_;
  std::vector<std::size_t> assignment_;
};

/// Same keep-first semantics as dedup_exact, but only kept records in the `probes`
/// nearest inverted lists are candidates. Every removal is verified by exact cosine,
/// so approximation can only miss duplicates, never invent them.
DupDecision dedup_approx(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, double threshold,
                         const IvfOptions& options = {});

/// Gathers the embeddings referenced by each record (dimension x records).
/// Throws IntegrityError on a missing or out-of-range reference or an id-hash mismatch.
Eigen::MatrixXd gather_embeddings(const Manifest& m, const EmbeddingStore& store);

/// Same decision keyed by record id.
std::map<std::string, std::string> survivor_ids(const DupDecision& d, const Manifest& m);

}  // namespace curio
