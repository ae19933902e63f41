// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "curio/errors.hpp"
#include "curio/image.hpp"
#include "curio/metrics.hpp"
#include "support.hpp"

using namespace curio;
namespace ct = curio::testing;

namespace {

RgbImage gradient(Eigen::Index h, Eigen::Index w) {
  RgbImage img(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      img.r(y, x) = static_cast<std::uint8_t>((x * 37 + y * 11) % 256);
      img.g(y, x) = static_cast<std::uint8_t>((x * 5 + y * 71) % 256);
      img.b(y, x) = static_cast<std::uint8_t>((x * y) % 256);
    }
  return img;
}

bool same_pixels(const RgbImage& a, const RgbImage& b) { return a.r == b.r && a.g == b.g && a.b == b.b; }

}  // namespace

TEST_SUITE("image") {
  TEST_CASE("lossless formats decode to the encoded pixels") {
    const auto img = gradient(2, 2);
    for (const auto& bytes : {encode_png(img), encode_ppm(img)}) {
      const auto back = decode_and_validate(bytes);
      REQUIRE(back);
      CHECK(back->width() == 2);
      CHECK(back->height() == 2);
      CHECK(same_pixels(*back, img));
    }
  }

  TEST_CASE("jpeg decodes to the right shape") {
    const auto img = RgbImage::filled(24, 40, 200, 30, 90);
    const auto back = decode_and_validate(encode_jpeg(img, 95));
    REQUIRE(back);
    CHECK(back->width() == 40);
    CHECK(back->height() == 24);
    CHECK(std::abs(int(back->r(10, 10)) - 200) <= 3);
  }

  TEST_CASE("corrupted streams are rejected") {
    CHECK_FALSE(decode_and_validate({}));
    const std::uint8_t garbage[] = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK_FALSE(decode_and_validate(garbage));
    const auto img = gradient(64, 48);
    for (auto bytes : {encode_png(img), encode_jpeg(img), encode_ppm(img)}) {
      bytes.resize(bytes.size() / 2);
      CHECK_FALSE(decode_and_validate(bytes));
    }
    auto png = encode_png(img);
    png[png.size() / 2] ^= 0xFF;  // breaks a chunk CRC
    CHECK_FALSE(decode_and_validate(png));
  }

  TEST_CASE("BT.601 luma rounds to nearest") {
    auto img = RgbImage::filled(1, 3, 0, 0, 0);
    img.r(0, 0) = 255;
    img.g(0, 1) = 255;
    img.b(0, 2) = 255;
    const auto g = to_gray(img);
    CHECK(int(g(0, 0)) == 76);   // 76.245
    CHECK(int(g(0, 1)) == 150);  // 149.685
    CHECK(int(g(0, 2)) == 29);   // 29.07
    CHECK(int(to_gray(RgbImage::filled(2, 2, 255, 255, 255))(1, 1)) == 255);
  }

  TEST_CASE("scale normalization") {
    const GrayImage g = GrayImage::Constant(100, 400, 7);
    const auto n = scale_normalize(g, 512);
    CHECK(n.cols() == 512);
    CHECK(n.rows() == 128);
    CHECK((n.array() == 7.0).all());
    const auto tall = scale_normalize(GrayImage::Constant(300, 30, 1), 512);
    CHECK(tall.rows() == 512);
    CHECK(tall.cols() == 51);
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("laplacian variance base cases") {
    CHECK(laplacian_variance(Eigen::MatrixXd::Constant(9, 7, 3.5)) == 0.0);
    Eigen::MatrixXd spike = Eigen::MatrixXd::Zero(3, 3);
    spike(1, 1) = 1.0;
    CHECK(laplacian_variance(spike) == 0.0);  // one interior response, zero spread
    CHECK_THROWS_AS(laplacian_variance(Eigen::MatrixXd::Zero(2, 5)), MetricError);

    ct::Grid checker(8, std::vector<double>(8));
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t c = 0; c < 8; ++c) checker[r][c] = (r + c) % 2 ? 255.0 : 0.0;
    const auto img = ct::to_gray_image(checker);
    CHECK(laplacian_variance(img) == doctest::Approx(ct::brute_laplacian_variance(checker)).epsilon(1e-12));
  }

  TEST_CASE("laplacian variance agrees with the direct convolution oracle") {
    SplitMix64 rng(101);
    for (int trial = 0; trial < 200; ++trial) {
      const auto rows = 3 + rng.below(30), cols = 3 + rng.below(30);
      const auto g = ct::random_grid(rng, rows, cols);
      const double want = ct::brute_laplacian_variance(g);
      const double got = laplacian_variance(ct::to_gray_image(g));
      REQUIRE(ct::rel_close(got, want, 1e-9, 1e-12));
    }
  }

  TEST_CASE("entropy base cases") {
    CHECK(shannon_entropy(GrayImage::Constant(5, 5, 9)) == 0.0);
    GrayImage two(2, 4);
    two << 0, 0, 0, 0, 200, 200, 200, 200;
    CHECK(shannon_entropy(two) == 1.0);
    GrayImage all(16, 16);
    for (int i = 0; i < 256; ++i) all(i / 16, i % 16) = static_cast<std::uint8_t>(i);
    CHECK(shannon_entropy(all) == 8.0);
    CHECK_THROWS_AS(shannon_entropy(GrayImage(0, 0)), MetricError);
  }

  TEST_CASE("entropy agrees with the histogram oracle") {
    SplitMix64 rng(202);
    for (int trial = 0; trial < 200; ++trial) {
      const auto g = ct::random_grid(rng, 1 + rng.below(32), 1 + rng.below(32), 1 + static_cast<int>(rng.below(256)));
      REQUIRE(ct::rel_close(shannon_entropy(ct::to_gray_image(g)), ct::brute_entropy(g), 1e-9, 1e-12));
    }
  }

  TEST_CASE("mean luminance is the HSV value") {
    CHECK(mean_luminance(RgbImage::filled(3, 3, 0, 0, 0)) == 0.0);
    CHECK(mean_luminance(RgbImage::filled(3, 3, 255, 255, 255)) == 1.0);
    CHECK(mean_luminance(RgbImage::filled(3, 3, 255, 0, 0)) == 1.0);
    CHECK(mean_luminance(RgbImage::filled(1, 1, 10, 51, 20)) == doctest::Approx(0.2));
    CHECK_THROWS_AS(mean_luminance(RgbImage{}), MetricError);
  }
}
