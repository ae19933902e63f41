// SPDX-License-Identifier: Apache-2.0
#include "curio/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "curio/errors.hpp"

namespace curio {

namespace {

// Guards against decompression bombs: 2^28 pixels is far above any bucket size.
constexpr std::uint64_t kMaxPixels = 1ULL << 28;

RgbImage from_interleaved(const std::uint8_t* data, Eigen::Index h, Eigen::Index w, int channels) {
  RgbImage img(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const auto* px = data + (y * w + x) * channels;
      img.r(y, x) = px[0];
      img.g(y, x) = channels == 1 ? px[0] : px[1];
      img.b(y, x) = channels == 1 ? px[0] : px[2];
    }
  }
  return img;
}

std::vector<std::uint8_t> interleave(const RgbImage& img) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(img.width() * img.height() * 3));
  std::size_t k = 0;
  for (Eigen::Index y = 0; y < img.height(); ++y)
    for (Eigen::Index x = 0; x < img.width(); ++x) {
      out[k++] = img.r(y, x);
      out[k++] = img.g(y, x);
      out[k++] = img.b(y, x);
    }
  return out;
}

std::optional<RgbImage> decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) return std::nullopt;
  if (image.width == 0 || image.height == 0 ||
      static_cast<std::uint64_t>(image.width) * image.height > kMaxPixels) {
    png_image_free(&image);
    return std::nullopt;
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    return std::nullopt;
  }
  return from_interleaved(buf.data(), image.height, image.width, 3);
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  bool warned = false;
};

extern "C" void jpeg_on_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

extern "C" void jpeg_on_message(j_common_ptr cinfo, int level) {
  // level -1 is a warning such as "premature end of data segment".
  if (level < 0) reinterpret_cast<JpegErrorManager*>(cinfo->err)->warned = true;
}

std::optional<RgbImage> decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_on_error;
  err.pub.emit_message = jpeg_on_message;
  // Declared before setjmp so its lifetime is well defined across longjmp.
  std::vector<std::uint8_t> buf;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return std::nullopt;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  if (jpeg_read_header(&cinfo, TRUE) != JPEG_HEADER_OK) {
    jpeg_destroy_decompress(&cinfo);
    return std::nullopt;
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const auto w = cinfo.output_width, h = cinfo.output_height;
  if (w == 0 || h == 0 || static_cast<std::uint64_t>(w) * h > kMaxPixels || cinfo.output_components != 3) {
    jpeg_destroy_decompress(&cinfo);
    return std::nullopt;
  }
  buf.resize(static_cast<std::size_t>(w) * h * 3);
  while (cinfo.output_scanline < h) {
    JSAMPROW row = buf.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  bool warned = err.warned;
  jpeg_destroy_decompress(&cinfo);
  if (warned) return std::nullopt;
  return from_interleaved(buf.data(), h, w, 3);
}

// Netpbm binary P5/P6 with maxval <= 255.
std::optional<RgbImage> decode_pnm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  const int channels = bytes[1] == '6' ? 3 : 1;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&]() -> std::optional<std::uint64_t> {
    skip_ws();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) return std::nullopt;
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > kMaxPixels) return std::nullopt;
    }
    return v;
  };
  auto w = read_uint(), h = read_uint(), maxval = read_uint();
  if (!w || !h || !maxval || *w == 0 || *h == 0 || *maxval == 0 || *maxval > 255) return std::nullopt;
  if (*w * *h > kMaxPixels) return std::nullopt;
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) return std::nullopt;
  ++pos;
  const std::uint64_t need = *w * *h * channels;
  if (bytes.size() - pos < need) return std::nullopt;
  auto img = from_interleaved(bytes.data() + pos, static_cast<Eigen::Index>(*h), static_cast<Eigen::Index>(*w),
                              channels);
  if (*maxval != 255) {
    auto rescale = [m = static_cast<double>(*maxval)](std::uint8_t v) {
      return static_cast<std::uint8_t>(std::lround(std::min(255.0, v * 255.0 / m)));
    };
    img.r = img.r.unaryExpr(rescale);
    img.g = img.g.unaryExpr(rescale);
    img.b = img.b.unaryExpr(rescale);
  }
  return img;
}

}  // namespace

RgbImage RgbImage::filled(Eigen::Index height, Eigen::Index width, std::uint8_t red, std::uint8_t green,
                          std::uint8_t blue) {
  RgbImage img(height, width);
  img.r.setConstant(red);
  img.g.setConstant(green);
  img.b.setConstant(blue);
  return img;
}

std::optional<RgbImage> decode_and_validate(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) return std::nullopt;
  static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (std::equal(std::begin(png_sig), std::end(png_sig), bytes.begin())) return decode_png(bytes);
  if (bytes[0] == 0xFF && bytes[1] == 0xD8) return decode_jpeg(bytes);
  if (bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return decode_pnm(bytes);
  return std::nullopt;
}

std::optional<RgbImage> decode_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_and_validate(bytes);
}

GrayImage to_gray(const RgbImage& rgb) {
  Plane<double> luma = 0.299 * rgb.r.cast<double>() + 0.587 * rgb.g.cast<double>() + 0.114 * rgb.b.cast<double>();
  return luma.unaryExpr([](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); });
}

Plane<double> resize_bilinear(const Plane<double>& src, Eigen::Index out_rows, Eigen::Index out_cols) {
  if (src.size() == 0 || out_rows < 1 || out_cols < 1) throw ContractError("resize_bilinear: empty input or target");
  Plane<double> out(out_rows, out_cols);
  const double sy = static_cast<double>(src.rows()) / static_cast<double>(out_rows);
  const double sx = static_cast<double>(src.cols()) / static_cast<double>(out_cols);
  const Eigen::Index last_r = src.rows() - 1, last_c = src.cols() - 1;
  for (Eigen::Index y = 0; y < out_rows; ++y) {
    double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(last_r));
    auto y0 = static_cast<Eigen::Index>(std::floor(fy));
    auto y1 = std::min(y0 + 1, last_r);
    double wy = fy - static_cast<double>(y0);
    for (Eigen::Index x = 0; x < out_cols; ++x) {
      double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(last_c));
      auto x0 = static_cast<Eigen::Index>(std::floor(fx));
      auto x1 = std::min(x0 + 1, last_c);
      double wx = fx - static_cast<double>(x0);
      double top = src(y0, x0) * (1 - wx) + src(y0, x1) * wx;
      double bottom = src(y1, x0) * (1 - wx) + src(y1, x1) * wx;
      out(y, x) = top * (1 - wy) + bottom * wy;
    }
  }
  return out;
}

Plane<double> scale_normalize(const GrayImage& gray, Eigen::Index longer_side) {
  const auto h = gray.rows(), w = gray.cols();
  Eigen::Index out_h, out_w;
  if (w >= h) {
    out_w = longer_side;
    out_h = std::max<Eigen::Index>(1, std::lround(static_cast<double>(h) * longer_side / static_cast<double>(w)));
  } else {
    out_h = longer_side;
    out_w = std::max<Eigen::Index>(1, std::lround(static_cast<double>(w) * longer_side / static_cast<double>(h)));
  }
  Plane<double> src = gray.cast<double>();
  if (out_h == h && out_w == w) return src;
  return resize_bilinear(src, out_h, out_w);
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  auto pixels = interleave(img);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw Error("png encode failed");
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw Error("png encode failed");
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  auto pixels = interleave(img);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const RgbImage& img, int quality) {
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  unsigned char* mem = nullptr;
  unsigned long mem_size = 0;
  jpeg_mem_dest(&cinfo, &mem, &mem_size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  auto pixels = interleave(img);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width() * 3;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(mem, mem + mem_size);
  jpeg_destroy_compress(&cinfo);
  std::free(mem);
  return out;
}

}  // namespace curio
