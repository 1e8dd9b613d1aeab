#include "ghho/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "ghho/errors.hpp"

namespace ghho {

Histogram Histogram::of(const GrayImage& image) {
  Histogram h;
  for (Eigen::Index i = 0; i < image.size(); ++i) ++h.counts[image.data()[i]];
  h.total = static_cast<std::uint64_t>(image.size());
  return h;
}

GrayImage SegmentMask::to_image() const {
  return bits.unaryExpr([](bool b) { return static_cast<std::uint8_t>(b ? 255 : 0); });
}

// ---------------------------------------------------------------------------
// Enhancement

GrayImage median3x3(const GrayImage& image) {
  const Eigen::Index rows = image.rows(), cols = image.cols();
  GrayImage out(rows, cols);
  std::array<std::uint8_t, 9> window{};
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::size_t k = 0;
      for (Eigen::Index dr = -1; dr <= 1; ++dr)
        for (Eigen::Index dc = -1; dc <= 1; ++dc)
          window[k++] = image(std::clamp<Eigen::Index>(r + dr, 0, rows - 1),
                              std::clamp<Eigen::Index>(c + dc, 0, cols - 1));
      std::nth_element(window.begin(), window.begin() + 4, window.end());
      out(r, c) = window[4];
    }
  }
  return out;
}

GrayImage normalize_range(const GrayImage& image) {
  const int lo = image.minCoeff();
  const int hi = image.maxCoeff();
  if (lo == hi) return image;
  const double scale = 255.0 / (hi - lo);
  return image.unaryExpr([lo, scale](std::uint8_t v) {
    return static_cast<std::uint8_t>(std::lround((v - lo) * scale));
  });
}

GrayImage equalize_histogram(const GrayImage& image) {
  const Histogram h = Histogram::of(image);
  std::array<std::uint64_t, 256> cdf{};
  std::uint64_t running = 0;
  for (int v = 0; v < 256; ++v) cdf[v] = running += h.counts[v];
  std::uint64_t cdf_min = 0;
  for (int v = 0; v < 256; ++v)
    if (h.counts[v] > 0) { cdf_min = cdf[v]; break; }
  if (h.total == cdf_min) return image;
  std::array<std::uint8_t, 256> lut{};
  const double denom = static_cast<double>(h.total - cdf_min);
  for (int v = 0; v < 256; ++v) {
    const double mapped = cdf[v] < cdf_min ? 0.0 : (cdf[v] - cdf_min) * 255.0 / denom;
    lut[v] = static_cast<std::uint8_t>(std::lround(mapped));
  }
  return image.unaryExpr([&lut](std::uint8_t v) { return lut[v]; });
}

GrayImage preprocess(const GrayImage& image, const PreprocessOptions& options) {
  require(image.size() > 0, "preprocess: zero-area image");
  GrayImage out = options.median ? median3x3(image) : image;
  if (options.normalize) out = normalize_range(out);
  if (options.equalize) out = equalize_histogram(out);
  return out;
}

// ---------------------------------------------------------------------------
// Otsu

namespace {

struct ClassMoments {
  double count = 0, sum = 0, sum_sq = 0;

  double weighted_variance() const {
    if (count == 0) return 0.0;
    return std::max(0.0, sum_sq - sum * sum / count);
  }
};

void check_occupancy(const Histogram& hist) {
  require(hist.total > 0, "otsu_threshold: empty histogram");
  int occupied = 0;
  for (auto c : hist.counts) occupied += c > 0;
  if (occupied < 2)
    throw DegenerateHistogram("otsu_threshold: single occupied bin, no two-class split exists");
}

}  // namespace

double within_class_variance(const Histogram& hist, int t) {
  require(t >= 0 && t <= 254, "within_class_variance: t outside [0, 254]");
  require(hist.total > 0, "within_class_variance: empty histogram");
  ClassMoments lo, hi;
  for (int v = 0; v < 256; ++v) {
    const double n = static_cast<double>(hist.counts[v]);
    ClassMoments& m = v <= t ? lo : hi;
    m.count += n;
    m.sum += n * v;
    m.sum_sq += n * v * v;
  }
  // w_k * var_k = (n_k / N) * var_k
  return (lo.weighted_variance() + hi.weighted_variance()) / static_cast<double>(hist.total);
}

int otsu_threshold(const Histogram& hist) {
  check_occupancy(hist);
  // Prefix moments are integers, exact in double up to 2^53.
  ClassMoments total;
  for (int v = 0; v < 256; ++v) {
    const double n = static_cast<double>(hist.counts[v]);
    total.count += n;
    total.sum += n * v;
    total.sum_sq += n * v * v;
  }
  ClassMoments lo;
  int best_t = 0;
  double best = 0.0;
  for (int t = 0; t <= 254; ++t) {
    const double n = static_cast<double>(hist.counts[t]);
    lo.count += n;
    lo.sum += n * t;
    lo.sum_sq += n * t * t;
    const ClassMoments hi{total.count - lo.count, total.sum - lo.sum, total.sum_sq - lo.sum_sq};
    const double value =
        (lo.weighted_variance() + hi.weighted_variance()) / static_cast<double>(hist.total);
    if (t == 0 || value < best) {
      best = value;
      best_t = t;
    }
  }
  return best_t;
}

SegmentMask binarize(const GrayImage& image, int t) {
  SegmentMask m;
  m.threshold = t;
  m.bits = image.unaryExpr([t](std::uint8_t v) { return static_cast<int>(v) > t; });
  return m;
}

// ---------------------------------------------------------------------------
// Morphology and labelling

SegmentMask fill_holes(const SegmentMask& mask) {
  const Eigen::Index rows = mask.rows(), cols = mask.cols();
  MaskBits outside = MaskBits::Zero(rows, cols);
  std::deque<std::pair<Eigen::Index, Eigen::Index>> frontier;
  const auto seed = [&](Eigen::Index r, Eigen::Index c) {
    if (!mask.bits(r, c) && !outside(r, c)) {
      outside(r, c) = true;
      frontier.emplace_back(r, c);
    }
  };
  for (Eigen::Index c = 0; c < cols; ++c) {
    seed(0, c);
    seed(rows - 1, c);
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    seed(r, 0);
    seed(r, cols - 1);
  }
  while (!frontier.empty()) {
    const auto [r, c] = frontier.front();
    frontier.pop_front();
    if (r > 0) seed(r - 1, c);
    if (r + 1 < rows) seed(r + 1, c);
    if (c > 0) seed(r, c - 1);
    if (c + 1 < cols) seed(r, c + 1);
  }
  SegmentMask out;
  out.threshold = mask.threshold;
  out.bits = mask.bits.array() || !outside.array();
  return out;
}

std::vector<Segment> extract_segments(const SegmentMask& mask) {
  const Eigen::Index rows = mask.rows(), cols = mask.cols();
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> labels =
      Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(rows, cols);
  std::vector<Segment> segments;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack;

  for (Eigen::Index r0 = 0; r0 < rows; ++r0) {
    for (Eigen::Index c0 = 0; c0 < cols; ++c0) {
      if (!mask.bits(r0, c0) || labels(r0, c0) != 0) continue;
      Segment seg;
      seg.label = static_cast<int>(segments.size()) + 1;
      seg.box = {r0, c0, r0, c0};
      labels(r0, c0) = seg.label;
      stack.assign(1, {r0, c0});
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        seg.pixels.push_back(r * cols + c);
        seg.box.top = std::min(seg.box.top, r);
        seg.box.bottom = std::max(seg.box.bottom, r);
        seg.box.left = std::min(seg.box.left, c);
        seg.box.right = std::max(seg.box.right, c);
        for (Eigen::Index dr = -1; dr <= 1; ++dr) {
          for (Eigen::Index dc = -1; dc <= 1; ++dc) {
            const Eigen::Index nr = r + dr, nc = c + dc;
            if (nr < 0 || nc < 0 || nr >= rows || nc >= cols) continue;
            if (!mask.bits(nr, nc) || labels(nr, nc) != 0) continue;
            labels(nr, nc) = seg.label;
            stack.emplace_back(nr, nc);
          }
        }
      }
      std::sort(seg.pixels.begin(), seg.pixels.end());
      segments.push_back(std::move(seg));
    }
  }
  return segments;
}

GrayImage apply_mask(const GrayImage& image, const SegmentMask& mask) {
  require(image.rows() == mask.rows() && image.cols() == mask.cols(),
          "apply_mask: image and mask dimensions differ");
  return mask.bits.select(image, GrayImage::Zero(image.rows(), image.cols()));
}

SegmentationResult segment_image(const GrayImage& image, const PreprocessOptions& options,
                                 bool use_otsu) {
  SegmentationResult out;
  out.enhanced = preprocess(image, options);
  int t = 127;
  if (use_otsu) {
    try {
      t = otsu_threshold(Histogram::of(out.enhanced));
    } catch (const DegenerateHistogram&) {
      out.degenerate = true;
      t = 255;  // nothing exceeds 255: empty mask
    }
  }
  out.mask = fill_holes(binarize(out.enhanced, t));
  out.masked = apply_mask(out.enhanced, out.mask);
  out.segments = extract_segments(out.mask);
  return out;
}

}  // namespace ghho
