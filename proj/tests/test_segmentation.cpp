#include <doctest.h>

#include <algorithm>
#include <set>

#include "ghho/errors.hpp"
#include "ghho/random.hpp"
#include "ghho/segmentation.hpp"
#include "oracles.hpp"

using namespace ghho;

namespace {

GrayImage random_image(Rng& rng, int rows, int cols, int lo = 0, int hi = 255) {
  GrayImage img(rows, cols);
  for (Eigen::Index i = 0; i < img.size(); ++i)
    img.data()[i] = static_cast<std::uint8_t>(lo + rng.next() % static_cast<std::uint64_t>(hi - lo + 1));
  return img;
}

SegmentMask random_mask(Rng& rng, int rows, int cols, double density) {
  SegmentMask m;
  m.bits.resize(rows, cols);
  for (Eigen::Index i = 0; i < m.bits.size(); ++i) m.bits.data()[i] = rng.uniform() < density;
  return m;
}

std::vector<int> to_ints(const MaskBits& b) {
  std::vector<int> v(static_cast<std::size_t>(b.size()));
  for (Eigen::Index i = 0; i < b.size(); ++i) v[i] = b.data()[i] ? 1 : 0;
  return v;
}

}  // namespace

TEST_CASE("preprocess") {
  GrayImage flat = GrayImage::Constant(4, 5, 77);
  CHECK(normalize_range(flat) == flat);
  CHECK(preprocess(flat) == flat);

  GrayImage salt = GrayImage::Constant(3, 3, 10);
  salt(1, 1) = 255;
  salt(0, 0) = 20;
  // centre neighbourhood {20,10,10,10,255,10,10,10,10} has median 10
  CHECK(median3x3(salt)(1, 1) == 10);

  Rng rng(1);
  GrayImage band = random_image(rng, 8, 8, 50, 100);
  band(0, 0) = 50;
  band(7, 7) = 100;
  const GrayImage n = normalize_range(band);
  CHECK(n.minCoeff() == 0);
  CHECK(n.maxCoeff() == 255);

  CHECK_THROWS_AS(preprocess(GrayImage(0, 0)), ContractViolation);

  const GrayImage eq = equalize_histogram(random_image(rng, 16, 16));
  CHECK(eq.maxCoeff() == 255);
}

TEST_CASE("median filter matches a brute-force window median") {
  Rng rng(2);
  const GrayImage img = random_image(rng, 9, 7);
  const GrayImage med = median3x3(img);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 7; ++c) {
      std::vector<int> w;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          w.push_back(img(std::clamp(r + dr, 0, 8), std::clamp(c + dc, 0, 6)));
      std::nth_element(w.begin(), w.begin() + 4, w.end());
      CHECK(med(r, c) == w[4]);
    }
}

TEST_CASE("otsu threshold") {
  GrayImage two(4, 4);
  two.topRows(2).setConstant(0);
  two.bottomRows(2).setConstant(255);
  CHECK(otsu_threshold(Histogram::of(two)) == 0);
  CHECK(within_class_variance(Histogram::of(two), 100) == 0.0);

  CHECK_THROWS_AS(otsu_threshold(Histogram::of(GrayImage::Constant(3, 3, 9))), DegenerateHistogram);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const GrayImage img = random_image(rng, 16, 16);
    std::vector<std::uint8_t> px(img.data(), img.data() + img.size());
    CHECK(otsu_threshold(Histogram::of(img)) == oracle::otsu_brute_force(px));
  }
  // A second, algebraically different formulation on a bimodal image.
  GrayImage bi(20, 20);
  for (Eigen::Index i = 0; i < bi.size(); ++i)
    bi.data()[i] = static_cast<std::uint8_t>(i % 3 ? 40 + rng.next() % 30 : 180 + rng.next() % 40);
  std::vector<std::uint8_t> px(bi.data(), bi.data() + bi.size());
  CHECK(otsu_threshold(Histogram::of(bi)) == oracle::otsu_between_class(px));
}

TEST_CASE("binarize") {
  Rng rng(4);
  const GrayImage img = random_image(rng, 10, 12);
  CHECK(binarize(img, 255).count() == 0);

  GrayImage bits(2, 2);
  bits << 0, 1, 1, 0;
  const SegmentMask m = binarize(bits, 0);
  CHECK(m.bits(0, 1));
  CHECK(m.bits(1, 0));
  CHECK(m.count() == 2);

  const SegmentMask r = binarize(img, 100);
  CHECK(r.threshold == 100);
  for (Eigen::Index i = 0; i < img.size(); ++i) CHECK(r.bits.data()[i] == (img.data()[i] > 100));
}

TEST_CASE("fill_holes") {
  SegmentMask ring;
  ring.bits = MaskBits::Constant(5, 5, false);
  ring.bits.block(1, 1, 3, 3).setConstant(true);
  ring.bits(2, 2) = false;
  CHECK(fill_holes(ring).bits(2, 2));
  CHECK(fill_holes(ring).count() == 9);

  SegmentMask empty;
  empty.bits = MaskBits::Constant(6, 4, false);
  CHECK(fill_holes(empty).count() == 0);

  // Diagonal gaps do not seal a hole under 4-connected background.
  SegmentMask diamond;
  diamond.bits = MaskBits::Constant(5, 5, false);
  diamond.bits(1, 2) = diamond.bits(2, 1) = diamond.bits(2, 3) = diamond.bits(3, 2) = true;
  CHECK(fill_holes(diamond).bits(2, 2));

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 5 + static_cast<int>(rng.next() % 15), cols = 5 + static_cast<int>(rng.next() % 15);
    const SegmentMask m = random_mask(rng, rows, cols, 0.55);
    CHECK(to_ints(fill_holes(m).bits) == oracle::fill_holes_relaxation(to_ints(m.bits), rows, cols));
  }
}

TEST_CASE("extract_segments") {
  SegmentMask two;
  two.bits = MaskBits::Constant(6, 6, false);
  two.bits.block(0, 0, 2, 2).setConstant(true);
  two.bits.block(3, 3, 2, 2).setConstant(true);
  const auto segs = extract_segments(two);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].pixels.size() == 4);
  CHECK(segs[1].pixels.size() == 4);
  CHECK(segs[0].label == 1);
  CHECK(segs[1].box.top == 3);
  CHECK(segs[1].box.height() == 2);

  SegmentMask diag;
  diag.bits = MaskBits::Constant(3, 3, false);
  diag.bits(0, 0) = diag.bits(1, 1) = true;
  CHECK(extract_segments(diag).size() == 1);

  SegmentMask none;
  none.bits = MaskBits::Constant(3, 3, false);
  CHECK(extract_segments(none).empty());

  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 4 + static_cast<int>(rng.next() % 20), cols = 4 + static_cast<int>(rng.next() % 20);
    const SegmentMask m = random_mask(rng, rows, cols, 0.4);
    const auto root = oracle::components_union_find(to_ints(m.bits), rows, cols);
    const auto got = extract_segments(m);
    std::set<int> roots;
    for (int r : root)
      if (r >= 0) roots.insert(r);
    CHECK(got.size() == roots.size());
    std::size_t covered = 0;
    for (const auto& s : got) {
      REQUIRE(!s.pixels.empty());
      CHECK(std::is_sorted(s.pixels.begin(), s.pixels.end()));
      // the smallest flat index is the component's oracle root
      const int rep = root[s.pixels.front()];
      CHECK(rep == s.pixels.front());
      for (auto p : s.pixels) CHECK(root[p] == rep);
      covered += s.pixels.size();
    }
    CHECK(covered == m.count());
  }
}

TEST_CASE("apply_mask") {
  Rng rng(7);
  const GrayImage img = random_image(rng, 7, 9);
  SegmentMask full;
  full.bits = MaskBits::Constant(7, 9, true);
  CHECK(apply_mask(img, full) == img);
  SegmentMask empty;
  empty.bits = MaskBits::Constant(7, 9, false);
  CHECK(apply_mask(img, empty).maxCoeff() == 0);
  const SegmentMask m = random_mask(rng, 7, 9, 0.5);
  const GrayImage out = apply_mask(img, m);
  for (Eigen::Index i = 0; i < img.size(); ++i) CHECK(out.data()[i] == img.data()[i] * (m.bits.data()[i] ? 1 : 0));
  SegmentMask wrong;
  wrong.bits = MaskBits::Constant(3, 3, true);
  CHECK_THROWS_AS(apply_mask(img, wrong), ContractViolation);
}

TEST_CASE("segment_image on a synthetic blob") {
  Rng rng(8);
  GrayImage img = random_image(rng, 40, 40, 0, 30);
  img.block(10, 12, 12, 8).setConstant(220);
  img(15, 15) = 10;  // a dark hole inside the blob
  const SegmentationResult r = segment_image(img);
  CHECK_FALSE(r.degenerate);
  REQUIRE(!r.segments.empty());
  const auto largest = *std::max_element(r.segments.begin(), r.segments.end(),
                                         [](const Segment& a, const Segment& b) { return a.pixels.size() < b.pixels.size(); });
  CHECK(largest.box.top == 10);
  CHECK(largest.box.left == 12);
  CHECK(largest.box.height() == 12);
  CHECK(largest.box.width() == 8);
  CHECK(r.mask.bits(15, 15));

  const SegmentationResult flat = segment_image(GrayImage::Constant(8, 8, 50));
  CHECK(flat.degenerate);
  CHECK(flat.mask.count() == 0);
  CHECK(flat.segments.empty());
}
