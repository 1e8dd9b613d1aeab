#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "ghho/image.hpp"
#include "ghho/segmentation.hpp"

namespace ghho {

/// Per-segment statistics: mean intensity, spread about the mean, and the
/// ellipse-area size estimate of the bounding box.
struct FeatureVector {
  double mean = 0.0;
  double variance = 0.0;
  double tumor_size = 0.0;

  static constexpr int size = 3;
  Eigen::Vector3d as_vector() const { return {mean, variance, tumor_size}; }
};

struct FeatureOptions {
  /// Spread as mean squared deviation instead of mean absolute deviation.
  bool squared_variance = false;
};

double segment_mean(std::span<const std::uint8_t> pixels);
/// Mean absolute deviation from `mean` (mean squared deviation if `squared`).
double segment_variance(std::span<const std::uint8_t> pixels, double mean, bool squared = false);
/// pi/4 * L * W.
double tumor_size(double box_length, double box_width);

FeatureVector build_feature_vector(const Segment& segment, const GrayImage& source,
                                   const FeatureOptions& options = {});
/// One vector per segment, in label order.
std::vector<FeatureVector> build_feature_vectors(const std::vector<Segment>& segments,
                                                 const GrayImage& source,
                                                 const FeatureOptions& options = {});

/// Image-level summary fed to the classifier: the features of the segment
/// with the most pixels (lowest label on ties), or zeros when there is none.
FeatureVector dominant_features(const std::vector<Segment>& segments, const GrayImage& source,
                                const FeatureOptions& options = {});

/// Per-component min-max scaling fitted on a training set. Components with
/// zero range map to 0; values outside the fitted range are not clipped.
struct FeatureScaler {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Ones();

  static FeatureScaler fit(std::span<const FeatureVector> features);
  Eigen::VectorXd apply(const FeatureVector& f) const;
};

}  // namespace ghho
