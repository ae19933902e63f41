// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace curio {

template <class Scalar>
using Plane = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GrayImage = Plane<std::uint8_t>;

/// 8-bit RGB raster held as three planes of identical shape (rows = height).
struct RgbImage {
  GrayImage r, g, b;

  RgbImage() = default;
  RgbImage(Eigen::Index height, Eigen::Index width) : r(height, width), g(height, width), b(height, width) {}

  Eigen::Index width() const noexcept { return r.cols(); }
  Eigen::Index height() const noexcept { return r.rows(); }
  bool empty() const noexcept { return r.size() == 0; }

  static RgbImage filled(Eigen::Index height, Eigen::Index width, std::uint8_t red, std::uint8_t green,
                         std::uint8_t blue);
};

/// Decodes PNG, baseline/progressive JPEG, or binary PPM/PGM. Any truncation, CRC
/// failure or libjpeg warning yields nullopt: the record is treated as corrupted.
std::optional<RgbImage> decode_and_validate(std::span<const std::uint8_t> bytes);

std::optional<RgbImage> decode_file(const std::filesystem::path& path);

/// ITU-R BT.601 luma 0.299R + 0.587G + 0.114B, rounded to nearest integer.
GrayImage to_gray(const RgbImage& rgb);

/// Bilinear resize with half-pixel centers (edge samples clamp).
Plane<double> resize_bilinear(const Plane<double>& src, Eigen::Index out_rows, Eigen::Index out_cols);

/// Resize so the longer side equals `longer_side`, preserving aspect (shorter side >= 1).
Plane<double> scale_normalize(const GrayImage& gray, Eigen::Index longer_side = 512);

// Encoders used to write fixtures and thumbnails of synthetic data.
std::vector<std::uint8_t> encode_png(const RgbImage& img);
std::vector<std::uint8_t> encode_ppm(const RgbImage& img);
std::vector<std::uint8_t> encode_jpeg(const RgbImage& img, int quality = 95);

}  // namespace curio
