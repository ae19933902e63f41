// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations and fixture generators shared by the
// unit tests and the acceptance binary.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "curio/image.hpp"
#include "curio/manifest.hpp"
#include "curio/rng.hpp"

namespace curio::testing {

// ---- numeric helpers

bool rel_close(double a, double b, double rel, double abs_floor = 0.0);

/// Standard normal variate by Box-Muller over SplitMix64 (independent of <random>).
double normal(SplitMix64& rng);

// ---- brute-force metric oracles: plain loops over std::vector, no Eigen

using Grid = std::vector<std::vector<double>>;

Grid random_grid(SplitMix64& rng, std::size_t rows, std::size_t cols, int levels = 256);
double brute_laplacian_variance(const Grid& g);
double brute_entropy(const Grid& g);  // g holds integers in [0, 255]
GrayImage to_gray_image(const Grid& g);

// ---- embedding fixtures

/// D x N matrix of independent Gaussian columns (not normalized).
Eigen::MatrixXd gaussian_columns(SplitMix64& rng, Eigen::Index dim, Eigen::Index count);

/// Unit vector whose cosine with unit `base` is exactly-ish `cosine`, in a random orthogonal direction.
Eigen::VectorXd at_cosine(SplitMix64& rng, const Eigen::VectorXd& base, double cosine);

struct PlantedSet {
  Eigen::MatrixXd vectors;          // D x N
  std::vector<std::size_t> copies;  // indices planted as near-copies of an earlier vector
};

/// `count` random vectors, `planted` of which are replaced by copies (cosine >= min_cosine)
/// of an earlier original, placed after it.
PlantedSet planted_duplicates(SplitMix64& rng, Eigen::Index dim, std::size_t count, std::size_t planted,
                              double min_cosine);

// ---- manifest fixtures

/// Records "r000000"... with random sizes in [256, 2048] and random sources.
Manifest random_manifest(SplitMix64& rng, std::size_t count);

// ---- distribution oracles

/// CDF tabulated by composite Simpson integration of `pdf` over (0, 1).
class NumericCdf {
public:
  NumericCdf(const std::function<double(double)>& pdf, std::size_t intervals);
  double operator()(double t) const;

private:
  std::vector<double> grid_, cum_;
};

/// sup |F_n - F| over the sorted sample.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov critical value at the 1% level.
inline double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

// ---- filesystem

class TempDir {
public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& text);

}  // namespace curio::testing
