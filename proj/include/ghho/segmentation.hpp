#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ghho/image.hpp"

namespace ghho {

using MaskBits = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Histogram {
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t total = 0;

  static Histogram of(const GrayImage& image);
};

/// Binary mask aligned with its source image plus the threshold that produced it.
struct SegmentMask {
  MaskBits bits;
  int threshold = 0;

  Eigen::Index rows() const { return bits.rows(); }
  Eigen::Index cols() const { return bits.cols(); }
  std::size_t count() const { return static_cast<std::size_t>(bits.count()); }
  /// {0, 255} rendering for PGM export.
  GrayImage to_image() const;
};

struct PreprocessOptions {
  bool median = true;
  bool normalize = true;
  bool equalize = false;
};

/// Optional 3x3 median (replicated border) -> min-max stretch -> optional
/// histogram equalisation.
GrayImage preprocess(const GrayImage& image, const PreprocessOptions& options = {});

GrayImage median3x3(const GrayImage& image);
/// Maps [min, max] onto [0, 255]; constant images are returned unchanged.
GrayImage normalize_range(const GrayImage& image);
GrayImage equalize_histogram(const GrayImage& image);

/// Weighted within-class variance w0*var0 + w1*var1 for the split
/// {0..t} | {t+1..255}. Empty classes contribute zero.
double within_class_variance(const Histogram& hist, int t);

/// Threshold in [0, 254] minimising the within-class variance; ties go to the
/// smallest t. Throws DegenerateHistogram when only one bin is occupied.
int otsu_threshold(const Histogram& hist);

/// Bit set where pixel > t.
SegmentMask binarize(const GrayImage& image, int t);

/// Sets every 4-connected background region that does not touch the border.
SegmentMask fill_holes(const SegmentMask& mask);

struct BoundingBox {
  Eigen::Index top = 0, left = 0, bottom = 0, right = 0;  // inclusive

  Eigen::Index height() const { return bottom - top + 1; }
  Eigen::Index width() const { return right - left + 1; }
};

struct Segment {
  int label = 0;  // 1-based, raster-scan discovery order
  std::vector<Eigen::Index> pixels;  // row-major flat indices, ascending
  BoundingBox box;
};

/// 8-connected foreground components.
std::vector<Segment> extract_segments(const SegmentMask& mask);

/// Keeps pixels under set bits, zeroes the rest.
GrayImage apply_mask(const GrayImage& image, const SegmentMask& mask);

/// Result of the full preprocess -> Otsu -> binarize -> fill -> mask chain.
struct SegmentationResult {
  GrayImage enhanced;
  SegmentMask mask;
  GrayImage masked;
  std::vector<Segment> segments;
  bool degenerate = false;  // histogram had one occupied bin; mask is empty
};

SegmentationResult segment_image(const GrayImage& image, const PreprocessOptions& options = {},
                                 bool use_otsu = true);

}  // namespace ghho
