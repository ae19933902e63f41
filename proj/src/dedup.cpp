// SPDX-License-Identifier: Apache-2.0
#include "curio/dedup.hpp"

#include <cmath>
#include <numeric>

#include "curio/rng.hpp"

namespace curio {

namespace {

void check_threshold(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("duplicate threshold must lie in [0, 1]");
}

// GEMV screening may round differently from the per-pair dot product; candidates
// within this margin are re-checked with unit_cosine so decisions match it exactly.
constexpr double kScreenMargin = 1e-9;

}  // namespace

Eigen::MatrixXd normalize_columns(const Eigen::Ref<const Eigen::MatrixXd>& embeddings) {
  Eigen::MatrixXd out(embeddings.rows(), embeddings.cols());
  for (Eigen::Index c = 0; c < embeddings.cols(); ++c) out.col(c) = unit_vector(embeddings.col(c));
  return out;
}

DupDecision dedup_exact(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, double threshold) {
  check_threshold(threshold);
  const Eigen::MatrixXd unit = normalize_columns(embeddings);
  const auto n = unit.cols();
  DupDecision d;
  d.threshold = threshold;

  Eigen::MatrixXd kept(unit.rows(), n);
  std::vector<std::size_t> kept_index;
  kept_index.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(kept_index.size());
    bool dup = false;
    if (k > 0) {
      const Eigen::VectorXd screen = kept.leftCols(k).transpose() * unit.col(i);
      for (Eigen::Index j = 0; j < k; ++j) {
        if (screen(j) <= threshold - kScreenMargin) continue;
        if (unit_cosine(unit.col(i), kept.col(j)) > threshold) {
          d.survivor_map.emplace(static_cast<std::size_t>(i), kept_index[static_cast<std::size_t>(j)]);
          dup = true;
          break;
        }
      }
    }
    if (!dup) {
      kept.col(k) = unit.col(i);
      kept_index.push_back(static_cast<std::size_t>(i));
    }
  }
  return d;
}

IvfIndex::IvfIndex(const Eigen::Ref<const Eigen::MatrixXd>& unit_vectors, std::size_t lists, int iterations,
                   std::size_t max_training_points, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(unit_vectors.cols());
  const auto dim = unit_vectors.rows();
  lists = std::clamp<std::size_t>(lists, 1, std::max<std::size_t>(n, 1));

  // Training sample and initial centroids from one seeded permutation.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(seed);
  seeded_shuffle(std::span<std::size_t>(order), rng);
  const std::size_t train = std::min(n, std::max(max_training_points, lists));

  centroids_.resize(dim, static_cast<Eigen::Index>(lists));
  if (n == 0) {
    centroids_.setZero();
    return;
  }
  for (std::size_t c = 0; c < lists; ++c) centroids_.col(static_cast<Eigen::Index>(c)) = unit_vectors.col(static_cast<Eigen::Index>(order[c]));

  Eigen::MatrixXd sample(dim, static_cast<Eigen::Index>(train));
  for (std::size_t t = 0; t < train; ++t) sample.col(static_cast<Eigen::Index>(t)) = unit_vectors.col(static_cast<Eigen::Index>(order[t]));

  std::vector<Eigen::Index> label(train);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd sims = centroids_.transpose() * sample;
    for (std::size_t t = 0; t < train; ++t) sims.col(static_cast<Eigen::Index>(t)).maxCoeff(&label[t]);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(lists));
    for (std::size_t t = 0; t < train; ++t) sums.col(label[t]) += sample.col(static_cast<Eigen::Index>(t));
    for (Eigen::Index c = 0; c < sums.cols(); ++c) {
      const double norm = sums.col(c).norm();
      if (norm > 0.0) centroids_.col(c) = sums.col(c) / norm;  // empty clusters keep their centroid
    }
  }

  assignment_.resize(n);
  const Eigen::MatrixXd sims = centroids_.transpose() * unit_vectors;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    sims.col(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    assignment_[i] = static_cast<std::size_t>(best);
  }
}

std::vector<std::size_t> IvfIndex::nearest_lists(const Eigen::Ref<const Eigen::VectorXd>& query,
                                                 std::size_t probes) const {
  const Eigen::VectorXd sims = centroids_.transpose() * query;
  std::vector<std::size_t> idx(list_count());
  std::iota(idx.begin(), idx.end(), 0);
  probes = std::min(probes, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(probes), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double sa = sims(static_cast<Eigen::Index>(a)), sb = sims(static_cast<Eigen::Index>(b));
                      return sa != sb ? sa > sb : a < b;
                    });
  idx.resize(probes);
  return idx;
}

DupDecision dedup_approx(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, double threshold,
                         const IvfOptions& options) {
  check_threshold(threshold);
  if (options.probes < 1) throw ConfigError("probes must be >= 1");
  const Eigen::MatrixXd unit = normalize_columns(embeddings);
  const auto n = static_cast<std::size_t>(unit.cols());
  const std::size_t lists =
      options.lists > 0 ? options.lists
                        : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n)))));
  const IvfIndex index(unit, lists, options.kmeans_iterations, options.max_training_points, options.seed);

  DupDecision d;
  d.threshold = threshold;
  // Inverted lists hold kept records only, in ascending scan order.
  std::vector<std::vector<std::size_t>> inverted(index.list_count());
  for (std::size_t i = 0; i < n; ++i) {
    const auto query = unit.col(static_cast<Eigen::Index>(i));
    std::size_t survivor = n;
    for (auto list : index.nearest_lists(query, options.probes)) {
      for (auto j : inverted[list]) {
        if (j >= survivor) break;
        if (unit_cosine(query, unit.col(static_cast<Eigen::Index>(j))) > threshold) {
          survivor = j;
          break;
        }
      }
    }
    if (survivor < n) {
      d.survivor_map.emplace(i, survivor);
    } else {
      inverted[index.assignment()[i]].push_back(i);
    }
  }
  return d;
}

Eigen::MatrixXd gather_embeddings(const Manifest& m, const EmbeddingStore& store) {
  Eigen::MatrixXd out(store.dimension, static_cast<Eigen::Index>(m.records.size()));
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    if (!r.embedding_ref) throw IntegrityError("record \"" + r.id + "\" has no embedding_ref");
    const auto ref = *r.embedding_ref;
    if (ref >= store.size())
      throw IntegrityError("record \"" + r.id + "\" embedding_ref " + std::to_string(ref) + " out of range");
    if (store.id_hashes[ref] != embedding_id_hash(r.id))
      throw IntegrityError("record \"" + r.id + "\" does not match the id hash at embedding " + std::to_string(ref));
    out.col(static_cast<Eigen::Index>(i)) = store.vector(ref).cast<double>();
  }
  return out;
}

std::map<std::string, std::string> survivor_ids(const DupDecision& d, const Manifest& m) {
  std::map<std::string, std::string> out;
  for (const auto& [removed, kept] : d.survivor_map) out.emplace(m.records.at(removed).id, m.records.at(kept).id);
  return out;
}

}  // namespace curio
