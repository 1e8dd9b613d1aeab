#include "ghho/image.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cctype>
#include <array>
#include <cmath>
#include <csetjmp>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "ghho/errors.hpp"

namespace ghho {

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GrayImage decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw DataError(name + ": " + img.message);
  img.format = PNG_FORMAT_GRAY;
  GrayImage out(static_cast<Eigen::Index>(img.height), static_cast<Eigen::Index>(img.width));
  if (!png_image_finish_read(&img, nullptr, out.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw DataError(name + ": " + msg);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

GrayImage decode_jpeg(const std::vector<unsigned char>& bytes, const std::string& name) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_silent;
  // Nothing with a destructor may live between setjmp and longjmp.
  GrayImage* out = new GrayImage();
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    delete out;
    throw DataError(name + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_GRAYSCALE;
  jpeg_start_decompress(&cinfo);
  out->resize(cinfo.output_height, cinfo.output_width);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out->data() + static_cast<std::ptrdiff_t>(cinfo.output_scanline) * out->cols();
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  GrayImage result = std::move(*out);
  delete out;
  return result;
}

// Skips whitespace and '#' comments between PGM header tokens.
int pgm_token(const std::vector<unsigned char>& b, std::size_t& pos, const std::string& name) {
  for (;;) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    if (pos < b.size() && b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= b.size() || !std::isdigit(b[pos])) throw DataError(name + ": malformed PGM header");
  long value = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    value = value * 10 + (b[pos++] - '0');
    if (value > 1'000'000) throw DataError(name + ": PGM header value too large");
  }
  return static_cast<int>(value);
}

GrayImage decode_pgm(const std::vector<unsigned char>& b, const std::string& name) {
  std::size_t pos = 2;
  const int width = pgm_token(b, pos, name);
  const int height = pgm_token(b, pos, name);
  const int maxval = pgm_token(b, pos, name);
  if (width <= 0 || height <= 0) throw DataError(name + ": PGM has zero area");
  if (maxval <= 0 || maxval > 255) throw DataError(name + ": only 8-bit PGM is supported");
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (b.size() < pos + n) throw DataError(name + ": truncated PGM raster");
  GrayImage out(height, width);
  for (std::size_t i = 0; i < n; ++i) {
    const int v = b[pos + i];
    out.data()[i] = static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
  }
  return out;
}

}  // namespace

GrayImage read_image(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const std::string name = path.string();
  static constexpr std::array<unsigned char, 8> png_sig = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::equal(png_sig.begin(), png_sig.end(), bytes.begin()))
    return decode_png(bytes, name);
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF)
    return decode_jpeg(bytes, name);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes, name);
  throw DataError(name + ": unrecognised image format");
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data()), static_cast<std::streamsize>(image.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

GrayImage pad_and_resize(const GrayImage& image, int size) {
  require(image.size() > 0, "pad_and_resize: zero-area image");
  require(size > 0, "pad_and_resize: target size must be positive");
  const Eigen::Index side = std::max(image.rows(), image.cols());
  GrayImage square = GrayImage::Zero(side, side);
  square.block((side - image.rows()) / 2, (side - image.cols()) / 2, image.rows(), image.cols()) = image;
  if (side == size) return square;

  GrayImage out(size, size);
  const double scale = static_cast<double>(side) / size;
  for (int r = 0; r < size; ++r) {
    const double sy = std::clamp((r + 0.5) * scale - 0.5, 0.0, static_cast<double>(side - 1));
    const auto y0 = static_cast<Eigen::Index>(sy);
    const Eigen::Index y1 = std::min(y0 + 1, side - 1);
    const double fy = sy - y0;
    for (int c = 0; c < size; ++c) {
      const double sx = std::clamp((c + 0.5) * scale - 0.5, 0.0, static_cast<double>(side - 1));
      const auto x0 = static_cast<Eigen::Index>(sx);
      const Eigen::Index x1 = std::min(x0 + 1, side - 1);
      const double fx = sx - x0;
      const double top = square(y0, x0) * (1 - fx) + square(y0, x1) * fx;
      const double bottom = square(y1, x0) * (1 - fx) + square(y1, x1) * fx;
      out(r, c) = static_cast<std::uint8_t>(std::lround(top * (1 - fy) + bottom * fy));
    }
  }
  return out;
}

GrayImage rotate90(const GrayImage& image) { return image.transpose().rowwise().reverse(); }
GrayImage rotate180(const GrayImage& image) { return image.reverse(); }
GrayImage rotate270(const GrayImage& image) { return image.transpose().colwise().reverse(); }
GrayImage flip_horizontal(const GrayImage& image) { return image.rowwise().reverse(); }
GrayImage flip_vertical(const GrayImage& image) { return image.colwise().reverse(); }

GrayImage adjust_brightness(const GrayImage& image, int delta) {
  return image.unaryExpr([delta](std::uint8_t v) {
    return static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + delta, 0, 255));
  });
}

}  // namespace ghho
