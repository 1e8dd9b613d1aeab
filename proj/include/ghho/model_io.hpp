#pragma once

#include <filesystem>
#include <string>

#include "ghho/features.hpp"
#include "ghho/network.hpp"
#include "ghho/segmentation.hpp"

namespace ghho {

/// Everything needed to classify a raw image: topology, parameters, the
/// side-feature scaling and the preprocessing that produced the features.
struct Model {
  NetworkSpec spec;
  Weights weights;
  FeatureScaler scaler;
  PreprocessOptions preprocess;
  bool use_otsu = true;
};

/// Container layout: a line-oriented text header
///
///   GHHO-MODEL 1
///   input <c> <h> <w>
///   side <n>
///   layer conv <filters> <kh> <kw> <stride> <padding>   (one line per layer)
///   ...
///   scaler <min0> <min1> <min2> <max0> <max1> <max2>
///   preprocess <median> <normalize> <equalize> <otsu>
///   weights <count>
///   checksum <fnv1a64 of the weight bytes, 16 hex digits>
///   end
///
/// followed by <count> little-endian IEEE-754 doubles in layout order.
std::string encode_model(const Model& model);
Model decode_model(const std::string& bytes);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size);

}  // namespace ghho
