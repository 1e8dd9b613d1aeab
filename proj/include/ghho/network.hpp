#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ghho/errors.hpp"
#include "ghho/random.hpp"

namespace ghho {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct Shape {
  Eigen::Index channels = 0, height = 0, width = 0;

  Eigen::Index size() const { return channels * height * width; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Feature maps stored channel-major: data(c, y * width + x). A flat
/// activation is a tensor of shape (n, 1, 1).
template <typename Scalar>
struct Tensor {
  Shape shape;
  RowMatrix<Scalar> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(s), data(RowMatrix<Scalar>::Zero(s.channels, s.height * s.width)) {}

  static Tensor flat(const ColVector<Scalar>& v) {
    Tensor t(Shape{v.size(), 1, 1});
    t.data.col(0) = v;
    return t;
  }

  Scalar& at(Eigen::Index c, Eigen::Index y, Eigen::Index x) { return data(c, y * shape.width + x); }
  Scalar at(Eigen::Index c, Eigen::Index y, Eigen::Index x) const {
    return data(c, y * shape.width + x);
  }
  /// Channel-major flattening (c, y, x).
  ColVector<Scalar> flattened() const {
    return Eigen::Map<const ColVector<Scalar>>(data.data(), data.size());
  }
};

inline Eigen::Index conv_output_extent(Eigen::Index n, Eigen::Index k, Eigen::Index stride,
                                       Eigen::Index padding) {
  return (n + 2 * padding - k) / stride + 1;
}

/// Cross-correlation with bias. `kernels` is filters x (channels*kh*kw) with
/// column index c*kh*kw + z*kw + s. Lowered to one GEMM via im2col.
template <typename Scalar, typename KernelDerived, typename BiasDerived>
Tensor<Scalar> conv_forward(const Tensor<Scalar>& in, const Eigen::MatrixBase<KernelDerived>& kernels,
                            const Eigen::MatrixBase<BiasDerived>& biases, Eigen::Index kernel_h,
                            Eigen::Index kernel_w, Eigen::Index stride, Eigen::Index padding = 0) {
  const Shape s = in.shape;
  require(stride >= 1, "conv_forward: stride must be >= 1");
  require(padding >= 0, "conv_forward: negative padding");
  require(kernel_h <= s.height + 2 * padding && kernel_w <= s.width + 2 * padding,
          "conv_forward: kernel " + std::to_string(kernel_h) + "x" + std::to_string(kernel_w) +
              " larger than input " + s.str());
  require(kernels.cols() == s.channels * kernel_h * kernel_w,
          "conv_forward: kernel depth does not match input channels");
  require(biases.size() == kernels.rows(), "conv_forward: bias count differs from filter count");

  const Eigen::Index oh = conv_output_extent(s.height, kernel_h, stride, padding);
  const Eigen::Index ow = conv_output_extent(s.width, kernel_w, stride, padding);
  RowMatrix<Scalar> cols(s.channels * kernel_h * kernel_w, oh * ow);
  for (Eigen::Index c = 0; c < s.channels; ++c) {
    for (Eigen::Index z = 0; z < kernel_h; ++z) {
      for (Eigen::Index sx = 0; sx < kernel_w; ++sx) {
        const Eigen::Index row = (c * kernel_h + z) * kernel_w + sx;
        for (Eigen::Index p = 0; p < oh; ++p) {
          const Eigen::Index y = p * stride + z - padding;
          for (Eigen::Index w = 0; w < ow; ++w) {
            const Eigen::Index x = w * stride + sx - padding;
            const bool inside = y >= 0 && y < s.height && x >= 0 && x < s.width;
            cols(row, p * ow + w) = inside ? in.at(c, y, x) : Scalar(0);
          }
        }
      }
    }
  }
  Tensor<Scalar> out;
  out.shape = Shape{kernels.rows(), oh, ow};
  out.data.noalias() = kernels * cols;
  out.data.colwise() += biases.derived().template cast<Scalar>();
  return out;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& t) {
  Tensor<Scalar> out;
  out.shape = t.shape;
  out.data = t.data.cwiseMax(Scalar(0));
  return out;
}

template <typename Scalar>
Tensor<Scalar> maxpool(const Tensor<Scalar>& in, Eigen::Index window = 3, Eigen::Index stride = 2) {
  const Shape s = in.shape;
  require(stride >= 1, "maxpool: stride must be >= 1");
  require(s.height >= window && s.width >= window,
          "maxpool: input " + s.str() + " smaller than " + std::to_string(window) + "x" +
              std::to_string(window) + " window");
  const Eigen::Index oh = (s.height - window) / stride + 1;
  const Eigen::Index ow = (s.width - window) / stride + 1;
  Tensor<Scalar> out(Shape{s.channels, oh, ow});
  for (Eigen::Index c = 0; c < s.channels; ++c)
    for (Eigen::Index p = 0; p < oh; ++p)
      for (Eigen::Index w = 0; w < ow; ++w) {
        Scalar best = in.at(c, p * stride, w * stride);
        for (Eigen::Index dy = 0; dy < window; ++dy)
          for (Eigen::Index dx = 0; dx < window; ++dx)
            best = std::max(best, in.at(c, p * stride + dy, w * stride + dx));
        out.at(c, p, w) = best;
      }
  return out;
}

enum class Activation { identity, relu };

template <typename Scalar, typename MatrixDerived, typename BiasDerived>
ColVector<Scalar> fc_forward(const ColVector<Scalar>& input, const Eigen::MatrixBase<MatrixDerived>& matrix,
                             const Eigen::MatrixBase<BiasDerived>& bias, Activation activation) {
  require(matrix.cols() == input.size(), "fc_forward: matrix has " + std::to_string(matrix.cols()) +
                                             " columns, input has " + std::to_string(input.size()));
  require(bias.size() == matrix.rows(), "fc_forward: bias length differs from unit count");
  ColVector<Scalar> out = matrix * input + bias;
  if (activation == Activation::relu) out = out.cwiseMax(Scalar(0));
  return out;
}

template <typename Scalar>
ColVector<Scalar> softmax(const ColVector<Scalar>& logits) {
  const ColVector<Scalar> e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

// ---------------------------------------------------------------------------
// Topology

enum class LayerKind { conv, relu, maxpool, fully_connected, dropout, softmax_classifier };

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int filters = 0, kernel_h = 0, kernel_w = 0, stride = 1, padding = 0;  // conv
  int window = 3;                                                        // maxpool (uses stride)
  int units = 0;                                                         // fully_connected
  Activation activation = Activation::identity;                          // fully_connected
  double probability = 0.0;                                              // dropout

  static LayerSpec conv(int filters, int kernel, int stride, int padding = 0);
  static LayerSpec relu_layer();
  static LayerSpec maxpool(int window = 3, int stride = 2);
  static LayerSpec fully_connected(int units, Activation activation);
  static LayerSpec dropout(double probability);
  static LayerSpec softmax();

  bool has_parameters() const { return kind == LayerKind::conv || kind == LayerKind::fully_connected; }
  std::string describe() const;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  Shape input{1, 143, 143};
  int side_inputs = 3;

  /// conv(52,7x7,s2) relu pool conv(256,5x5,s2) relu pool conv(156,3x3,s2)
  /// relu pool fc(512,relu) dropout(0.5) fc(2) softmax, on 1x143x143.
  static NetworkSpec standard();

  /// Output shape of every layer; throws ContractViolation naming the first
  /// layer whose input does not fit.
  std::vector<Shape> shapes() const;
  void validate() const;
  /// Index of the first fully connected layer (where side inputs join).
  std::size_t first_fc_layer() const;
  std::size_t class_count() const;
  bool operator==(const NetworkSpec&) const;
};

/// Location of one parameterised layer inside the flat weight vector.
struct ParamBlock {
  std::size_t layer = 0;
  Eigen::Index rows = 0, cols = 0;
  Eigen::Index weight_offset = 0;  // rows*cols values, row-major
  Eigen::Index bias_offset = 0;    // rows values
  Eigen::Index end() const { return bias_offset + rows; }
};

std::vector<ParamBlock> parameter_layout(const NetworkSpec& spec);

/// Every parameter of a network in one flat vector plus its layout map.
/// Block accessors are views into the flat vector.
class Weights {
 public:
  Weights() = default;
  explicit Weights(const NetworkSpec& spec);  // zero-filled
  Weights(const NetworkSpec& spec, Eigen::VectorXd flat);

  const Eigen::VectorXd& flat() const { return flat_; }
  Eigen::VectorXd& flat() { return flat_; }
  Eigen::Index size() const { return flat_.size(); }
  const std::vector<ParamBlock>& layout() const { return layout_; }
  const ParamBlock& block_for_layer(std::size_t layer) const;

  Eigen::Map<const RowMatrix<double>> matrix(const ParamBlock& b) const {
    return {flat_.data() + b.weight_offset, b.rows, b.cols};
  }
  Eigen::Map<RowMatrix<double>> matrix(const ParamBlock& b) {
    return {flat_.data() + b.weight_offset, b.rows, b.cols};
  }
  Eigen::Map<const Eigen::VectorXd> bias(const ParamBlock& b) const {
    return {flat_.data() + b.bias_offset, b.rows};
  }
  Eigen::Map<Eigen::VectorXd> bias(const ParamBlock& b) {
    return {flat_.data() + b.bias_offset, b.rows};
  }

 private:
  Eigen::VectorXd flat_;
  std::vector<ParamBlock> layout_;
};

/// He-normal kernels and matrices (stddev sqrt(2 / fan_in)), zero biases.
Weights he_initialize(const NetworkSpec& spec, std::uint64_t seed);

/// Contiguous range of the flat weight vector exposed to the optimizer.
struct WeightSlice {
  Eigen::Index offset = 0;
  Eigen::Index length = 0;
  std::size_t first_layer = 0;  // earliest layer whose parameters are in the slice
};

enum class SliceMode { head, head_and_hidden };

/// `head`: the final fully connected layer. `head_and_hidden`: the last two.
WeightSlice search_slice(const NetworkSpec& spec, SliceMode mode);

// ---------------------------------------------------------------------------
// Forward pass

struct ForwardOptions {
  /// Dropout is the identity unless a generator is supplied, in which case
  /// units are dropped with the layer probability and survivors scaled by
  /// 1 / (1 - p).
  Rng* dropout_rng = nullptr;
  /// Called with (layer index, output) after every layer.
  std::function<void(std::size_t, const Tensor<double>&)> observer;
};

struct ForwardResult {
  Eigen::VectorXd logits;
  Eigen::VectorXd probabilities;
};

/// Flattens `state` and appends the side features.
Tensor<double> append_side(const Tensor<double>& state, const Eigen::VectorXd& side);

/// Runs layers [begin, end) on `state`. The side features are appended after
/// flattening, on entry to the first fully connected layer; pass an empty
/// `side` when `state` already carries them.
Tensor<double> forward_layers(const NetworkSpec& spec, const Weights& weights, Tensor<double> state,
                              const Eigen::VectorXd& side, std::size_t begin, std::size_t end,
                              const ForwardOptions& options = {});

ForwardResult forward(const NetworkSpec& spec, const Weights& weights, const Tensor<double>& image,
                      const Eigen::VectorXd& side, const ForwardOptions& options = {});

/// Completes a forward pass from a cached activation that feeds `begin`
/// (already concatenated with side features if begin is the first FC layer).
ForwardResult forward_from(const NetworkSpec& spec, const Weights& weights,
                           const Tensor<double>& activation, std::size_t begin,
                           const ForwardOptions& options = {});

}  // namespace ghho
