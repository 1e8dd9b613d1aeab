#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ghho/errors.hpp"
#include "ghho/image.hpp"
#include "ghho/random.hpp"

using namespace ghho;
namespace fs = std::filesystem;

namespace {

GrayImage sample(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  GrayImage img(rows, cols);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<std::uint8_t>(rng.next() % 256);
  return img;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ghho_test_image";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("pgm round trip") {
  const GrayImage img = sample(7, 11, 1);
  const auto p = scratch("a.pgm");
  write_pgm(p, img);
  const GrayImage back = read_image(p);
  CHECK(back.rows() == 7);
  CHECK(back.cols() == 11);
  CHECK(back == img);
}

TEST_CASE("pgm with comment and low maxval") {
  const auto p = scratch("b.pgm");
  {
    std::ofstream out(p, std::ios::binary);
    out << "P5\n# hello\n2 1\n15\n";
    out.put(0);
    out.put(15);
  }
  const GrayImage img = read_image(p);
  CHECK(img(0, 0) == 0);
  CHECK(img(0, 1) == 255);
}

TEST_CASE("corrupt files raise DataError") {
  const auto p = scratch("junk.png");
  {
    std::ofstream out(p, std::ios::binary);
    out << "not an image at all";
  }
  CHECK_THROWS_AS(read_image(p), DataError);
  const auto t = scratch("trunc.png");
  {
    std::ofstream out(t, std::ios::binary);
    const unsigned char sig[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n', 0, 0};
    out.write(reinterpret_cast<const char*>(sig), sizeof sig);
  }
  CHECK_THROWS_AS(read_image(t), DataError);
  CHECK_THROWS_AS(read_image(scratch("missing.pgm")), DataError);
}

TEST_CASE("geometric transforms") {
  GrayImage img(2, 3);
  img << 1, 2, 3, 4, 5, 6;
  GrayImage cw(3, 2);
  cw << 4, 1, 5, 2, 6, 3;
  CHECK(rotate90(img) == cw);
  CHECK(rotate180(img) == rotate90(rotate90(img)));
  CHECK(rotate270(rotate90(img)) == img);
  GrayImage fh(2, 3);
  fh << 3, 2, 1, 6, 5, 4;
  CHECK(flip_horizontal(img) == fh);
  GrayImage fv(2, 3);
  fv << 4, 5, 6, 1, 2, 3;
  CHECK(flip_vertical(img) == fv);
  GrayImage b = adjust_brightness(img, 250);
  CHECK(b(1, 2) == 255);
  CHECK(adjust_brightness(img, -5)(0, 0) == 0);
}

TEST_CASE("pad_and_resize") {
  const GrayImage img = GrayImage::Constant(10, 20, 200);
  const GrayImage out = pad_and_resize(img, 143);
  CHECK(out.rows() == 143);
  CHECK(out.cols() == 143);
  CHECK(out(71, 71) == 200);
  CHECK(out(2, 71) == 0);  // padded band above the content

  const GrayImage same = sample(16, 16, 2);
  CHECK(pad_and_resize(same, 16) == same);
}
