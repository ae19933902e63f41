// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "curio/errors.hpp"
#include "curio/image.hpp"

namespace curio {

/// Population variance of the 4-neighbour Laplacian [[0,1,0],[1,-4,1],[0,1,0]]
/// over the valid interior (rows-2)x(cols-2). Requires at least a 3x3 grid.
template <class Derived>
double laplacian_variance(const Eigen::MatrixBase<Derived>& grid) {
  const auto rows = grid.rows(), cols = grid.cols();
  if (rows < 3 || cols < 3) throw MetricError("laplacian_variance: grid smaller than 3x3 kernel");
  const auto g = grid.template cast<double>();
  const auto ir = rows - 2, ic = cols - 2;
  const Eigen::ArrayXXd response = (g.block(0, 1, ir, ic) + g.block(2, 1, ir, ic) + g.block(1, 0, ir, ic) +
                                    g.block(1, 2, ir, ic) - 4.0 * g.block(1, 1, ir, ic))
                                       .array();
  const double mean = response.mean();
  return (response - mean).square().mean();
}

/// 256-bin intensity histogram of an 8-bit grid.
template <class Derived>
std::array<std::uint64_t, 256> intensity_histogram(const Eigen::MatrixBase<Derived>& grid) {
  static_assert(std::is_same_v<typename Derived::Scalar, std::uint8_t>, "histogram expects 8-bit intensities");
  std::array<std::uint64_t, 256> hist{};
  for (Eigen::Index r = 0; r < grid.rows(); ++r)
    for (Eigen::Index c = 0; c < grid.cols(); ++c) ++hist[grid(r, c)];
  return hist;
}

/// Shannon entropy in bits of the intensity histogram; empty bins contribute 0.
template <class Derived>
double shannon_entropy(const Eigen::MatrixBase<Derived>& grid) {
  if (grid.size() == 0) throw MetricError("shannon_entropy: empty grid");
  const auto hist = intensity_histogram(grid);
  const double n = static_cast<double>(grid.size());
  double h = 0.0;
  for (auto count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  // -p log2 p sums can land a few ulps below zero for a single bin.
  return h < 0.0 ? 0.0 : h;
}

/// Mean HSV value channel, max(R,G,B)/255, in [0,1].
inline double mean_luminance(const RgbImage& img) {
  if (img.empty()) throw MetricError("mean_luminance: empty image");
  const auto v = img.r.cwiseMax(img.g).cwiseMax(img.b).template cast<double>();
  return v.mean() / 255.0;
}

}  // namespace curio
