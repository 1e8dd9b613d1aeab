#include "ghho/features.hpp"

#include <cmath>
#include <numbers>

#include "ghho/errors.hpp"

namespace ghho {

double segment_mean(std::span<const std::uint8_t> pixels) {
  require(!pixels.empty(), "segment_mean: empty segment");
  std::uint64_t sum = 0;
  for (auto p : pixels) sum += p;
  return static_cast<double>(sum) / static_cast<double>(pixels.size());
}

double segment_variance(std::span<const std::uint8_t> pixels, double mean, bool squared) {
  require(!pixels.empty(), "segment_variance: empty segment");
  double acc = 0.0;
  for (auto p : pixels) {
    const double d = p - mean;
    acc += squared ? d * d : std::abs(d);
  }
  return acc / static_cast<double>(pixels.size());
}

double tumor_size(double box_length, double box_width) {
  require(box_length >= 0.0 && box_width >= 0.0, "tumor_size: negative box extent");
  return std::numbers::pi / 4.0 * box_length * box_width;
}

FeatureVector build_feature_vector(const Segment& segment, const GrayImage& source,
                                   const FeatureOptions& options) {
  require(!segment.pixels.empty(), "build_feature_vector: empty segment");
  std::vector<std::uint8_t> values;
  values.reserve(segment.pixels.size());
  for (Eigen::Index idx : segment.pixels) {
    require(idx >= 0 && idx < source.size(), "build_feature_vector: pixel outside source image");
    values.push_back(source.data()[idx]);
  }
  FeatureVector f;
  f.mean = segment_mean(values);
  f.variance = segment_variance(values, f.mean, options.squared_variance);
  f.tumor_size = tumor_size(static_cast<double>(segment.box.height()),
                            static_cast<double>(segment.box.width()));
  return f;
}

std::vector<FeatureVector> build_feature_vectors(const std::vector<Segment>& segments,
                                                 const GrayImage& source,
                                                 const FeatureOptions& options) {
  std::vector<FeatureVector> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(build_feature_vector(s, source, options));
  return out;
}

FeatureVector dominant_features(const std::vector<Segment>& segments, const GrayImage& source,
                                const FeatureOptions& options) {
  const Segment* largest = nullptr;
  for (const auto& s : segments)
    if (!largest || s.pixels.size() > largest->pixels.size()) largest = &s;
  return largest ? build_feature_vector(*largest, source, options) : FeatureVector{};
}

FeatureScaler FeatureScaler::fit(std::span<const FeatureVector> features) {
  require(!features.empty(), "FeatureScaler::fit: no samples");
  FeatureScaler s;
  s.min = s.max = features.front().as_vector();
  for (const auto& f : features) {
    s.min = s.min.cwiseMin(f.as_vector());
    s.max = s.max.cwiseMax(f.as_vector());
  }
  return s;
}

Eigen::VectorXd FeatureScaler::apply(const FeatureVector& f) const {
  const Eigen::Vector3d range = max - min;
  Eigen::VectorXd out(3);
  for (int k = 0; k < 3; ++k) out[k] = range[k] > 0.0 ? (f.as_vector()[k] - min[k]) / range[k] : 0.0;
  return out;
}

}  // namespace ghho
