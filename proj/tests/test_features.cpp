#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ghho/errors.hpp"
#include "ghho/features.hpp"
#include "ghho/random.hpp"

using namespace ghho;

namespace {

double kahan_mean(const std::vector<std::uint8_t>& v) {
  double sum = 0, comp = 0;
  for (auto x : v) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / v.size();
}

}  // namespace

TEST_CASE("segment_mean") {
  const std::vector<std::uint8_t> a{10, 20, 30};
  CHECK(segment_mean(a) == 20.0);
  const std::vector<std::uint8_t> one{7};
  CHECK(segment_mean(one) == 7.0);
  CHECK_THROWS_AS(segment_mean({}), ContractViolation);

  Rng rng(1);
  std::vector<std::uint8_t> px(1000);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng.next() % 256);
  CHECK(segment_mean(px) == doctest::Approx(kahan_mean(px)).epsilon(1e-9));
}

TEST_CASE("segment_variance") {
  const std::vector<std::uint8_t> a{10, 20, 30};
  CHECK(segment_variance(a, 20.0) == doctest::Approx(20.0 / 3.0).epsilon(1e-15));
  CHECK(segment_variance(a, 20.0, true) == doctest::Approx(200.0 / 3.0));
  const std::vector<std::uint8_t> flat(9, 44);
  CHECK(segment_variance(flat, 44.0) == 0.0);
  CHECK_THROWS_AS(segment_variance({}, 0.0), ContractViolation);

  Rng rng(2);
  std::vector<std::uint8_t> px(500);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng.next() % 256);
  double mean = 0;
  for (auto p : px) mean += p;
  mean /= px.size();
  double mad = 0;
  for (auto p : px) mad += std::abs(p - mean);
  CHECK(segment_variance(px, segment_mean(px)) == doctest::Approx(mad / px.size()).epsilon(1e-12));
}

TEST_CASE("tumor_size") {
  CHECK(tumor_size(0, 9) == 0.0);
  CHECK(tumor_size(9, 0) == 0.0);
  CHECK(tumor_size(10, 10) == doctest::Approx(25 * std::numbers::pi));
  CHECK(tumor_size(4, 6) == doctest::Approx(6 * std::numbers::pi));
  CHECK_THROWS_AS(tumor_size(-1, 3), ContractViolation);
}

TEST_CASE("feature vectors from segments") {
  GrayImage img = GrayImage::Zero(6, 6);
  img.block(1, 2, 2, 2).setConstant(50);
  const SegmentMask m = binarize(img, 0);
  const auto segs = extract_segments(m);
  REQUIRE(segs.size() == 1);
  const FeatureVector f = build_feature_vector(segs[0], img);
  CHECK(f.mean == 50.0);
  CHECK(f.variance == 0.0);
  CHECK(f.tumor_size == doctest::Approx(std::numbers::pi));

  CHECK(build_feature_vectors({}, img).empty());
  const FeatureVector z = dominant_features({}, img);
  CHECK(z.as_vector() == Eigen::Vector3d::Zero());

  // random image: every component against its own oracle
  Rng rng(3);
  GrayImage r(20, 20);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = static_cast<std::uint8_t>(rng.next() % 256);
  const auto rs = extract_segments(binarize(r, 170));
  const auto fv = build_feature_vectors(rs, r);
  REQUIRE(fv.size() == rs.size());
  for (std::size_t k = 0; k < rs.size(); ++k) {
    std::vector<std::uint8_t> px;
    Eigen::Index top = 1000, left = 1000, bottom = -1, right = -1;
    for (auto p : rs[k].pixels) {
      px.push_back(r.data()[p]);
      top = std::min(top, p / 20);
      bottom = std::max(bottom, p / 20);
      left = std::min(left, p % 20);
      right = std::max(right, p % 20);
    }
    const double mu = kahan_mean(px);
    double mad = 0;
    for (auto p : px) mad += std::abs(p - mu);
    CHECK(fv[k].mean == doctest::Approx(mu));
    CHECK(fv[k].variance == doctest::Approx(mad / px.size()));
    CHECK(fv[k].tumor_size == doctest::Approx(std::numbers::pi / 4 * (bottom - top + 1) * (right - left + 1)));
  }
}

TEST_CASE("dominant_features picks the largest segment") {
  GrayImage img = GrayImage::Zero(10, 10);
  img.block(0, 0, 2, 2).setConstant(90);
  img.block(5, 5, 3, 3).setConstant(200);
  const auto segs = extract_segments(binarize(img, 0));
  CHECK(dominant_features(segs, img).mean == 200.0);
}

TEST_CASE("FeatureScaler") {
  std::vector<FeatureVector> fs{{0, 1, 10}, {10, 1, 30}, {5, 1, 20}};
  const FeatureScaler s = FeatureScaler::fit(fs);
  const Eigen::VectorXd a = s.apply({5, 1, 30});
  CHECK(a[0] == doctest::Approx(0.5));
  CHECK(a[1] == 0.0);
  CHECK(a[2] == doctest::Approx(1.0));
  CHECK(s.apply({20, 1, 10})[0] == doctest::Approx(2.0));
  CHECK_THROWS_AS(FeatureScaler::fit({}), ContractViolation);
}
