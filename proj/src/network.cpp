#include "ghho/network.hpp"

#include <cmath>
#include <sstream>

namespace ghho {

std::string Shape::str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

// ---------------------------------------------------------------------------
// LayerSpec

LayerSpec LayerSpec::conv(int filters, int kernel, int stride, int padding) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.filters = filters;
  l.kernel_h = l.kernel_w = kernel;
  l.stride = stride;
  l.padding = padding;
  return l;
}

LayerSpec LayerSpec::relu_layer() { return LayerSpec{}; }

LayerSpec LayerSpec::maxpool(int window, int stride) {
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.window = window;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::fully_connected(int units, Activation activation) {
  LayerSpec l;
  l.kind = LayerKind::fully_connected;
  l.units = units;
  l.activation = activation;
  return l;
}

LayerSpec LayerSpec::dropout(double probability) {
  LayerSpec l;
  l.kind = LayerKind::dropout;
  l.probability = probability;
  return l;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec l;
  l.kind = LayerKind::softmax_classifier;
  return l;
}

std::string LayerSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case LayerKind::conv:
      os << "conv(" << filters << ", " << kernel_h << "x" << kernel_w << ", stride " << stride
         << ", pad " << padding << ")";
      break;
    case LayerKind::relu: os << "relu"; break;
    case LayerKind::maxpool: os << "maxpool(" << window << "x" << window << ", stride " << stride << ")"; break;
    case LayerKind::fully_connected:
      os << "fc(" << units << (activation == Activation::relu ? ", relu" : "") << ")";
      break;
    case LayerKind::dropout: os << "dropout(" << probability << ")"; break;
    case LayerKind::softmax_classifier: os << "softmax"; break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// NetworkSpec

NetworkSpec NetworkSpec::standard() {
  NetworkSpec spec;
  spec.input = Shape{1, 143, 143};
  spec.side_inputs = 3;
  spec.layers = {
      LayerSpec::conv(52, 7, 2),  LayerSpec::relu_layer(), LayerSpec::maxpool(3, 2),
      LayerSpec::conv(256, 5, 2), LayerSpec::relu_layer(), LayerSpec::maxpool(3, 2),
      LayerSpec::conv(156, 3, 2), LayerSpec::relu_layer(), LayerSpec::maxpool(3, 2),
      LayerSpec::fully_connected(512, Activation::relu),
      LayerSpec::dropout(0.5),
      LayerSpec::fully_connected(2, Activation::identity),
      LayerSpec::softmax(),
  };
  return spec;
}

namespace {

std::string layer_name(std::size_t index, const LayerSpec& l) {
  return "layer " + std::to_string(index) + " " + l.describe();
}

}  // namespace

std::vector<Shape> NetworkSpec::shapes() const {
  require(input.size() > 0, "network input shape must be non-empty");
  require(side_inputs >= 0, "side_inputs must be non-negative");
  std::vector<Shape> out;
  out.reserve(layers.size());
  Shape s = input;
  bool joined = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::string name = layer_name(i, l);
    switch (l.kind) {
      case LayerKind::conv:
        require(!joined, name + ": convolution after a fully connected layer");
        require(l.filters >= 1 && l.kernel_h >= 1 && l.kernel_w >= 1, name + ": bad filter geometry");
        require(l.stride >= 1 && l.padding >= 0, name + ": stride must be >= 1, padding >= 0");
        require(l.kernel_h <= s.height + 2 * l.padding && l.kernel_w <= s.width + 2 * l.padding,
                name + ": kernel larger than input " + s.str());
        s = Shape{l.filters, conv_output_extent(s.height, l.kernel_h, l.stride, l.padding),
                  conv_output_extent(s.width, l.kernel_w, l.stride, l.padding)};
        break;
      case LayerKind::maxpool:
        require(!joined, name + ": pooling after a fully connected layer");
        require(l.window >= 1 && l.stride >= 1, name + ": bad pooling geometry");
        require(s.height >= l.window && s.width >= l.window,
                name + ": input " + s.str() + " smaller than pooling window");
        s = Shape{s.channels, (s.height - l.window) / l.stride + 1, (s.width - l.window) / l.stride + 1};
        break;
      case LayerKind::fully_connected:
        require(l.units >= 1, name + ": units must be >= 1");
        joined = true;
        s = Shape{l.units, 1, 1};
        break;
      case LayerKind::dropout:
        require(l.probability >= 0.0 && l.probability < 1.0, name + ": probability outside [0, 1)");
        break;
      case LayerKind::relu:
        break;
      case LayerKind::softmax_classifier:
        require(i + 1 == layers.size(), name + ": softmax must be the last layer");
        require(joined, name + ": softmax needs a fully connected layer before it");
        break;
    }
    out.push_back(s);
  }
  return out;
}

void NetworkSpec::validate() const {
  (void)shapes();
  require(!layers.empty() && layers.back().kind == LayerKind::softmax_classifier,
          "network must end in a softmax classifier");
  (void)first_fc_layer();
}

std::size_t NetworkSpec::first_fc_layer() const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].kind == LayerKind::fully_connected) return i;
  throw ContractViolation("network has no fully connected layer");
}

std::size_t NetworkSpec::class_count() const {
  for (std::size_t i = layers.size(); i-- > 0;)
    if (layers[i].kind == LayerKind::fully_connected) return static_cast<std::size_t>(layers[i].units);
  throw ContractViolation("network has no fully connected layer");
}

bool NetworkSpec::operator==(const NetworkSpec& other) const {
  if (!(input == other.input) || side_inputs != other.side_inputs ||
      layers.size() != other.layers.size())
    return false;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].describe() != other.layers[i].describe()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Weights

std::vector<ParamBlock> parameter_layout(const NetworkSpec& spec) {
  const std::vector<Shape> shapes = spec.shapes();
  const std::size_t first_fc = spec.first_fc_layer();
  std::vector<ParamBlock> layout;
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (!l.has_parameters()) continue;
    const Shape in = i == 0 ? spec.input : shapes[i - 1];
    ParamBlock b;
    b.layer = i;
    if (l.kind == LayerKind::conv) {
      b.rows = l.filters;
      b.cols = in.channels * l.kernel_h * l.kernel_w;
    } else {
      b.rows = l.units;
      b.cols = in.size() + (i == first_fc ? spec.side_inputs : 0);
    }
    b.weight_offset = offset;
    b.bias_offset = offset + b.rows * b.cols;
    offset = b.end();
    layout.push_back(b);
  }
  return layout;
}

Weights::Weights(const NetworkSpec& spec) : layout_(parameter_layout(spec)) {
  flat_ = Eigen::VectorXd::Zero(layout_.empty() ? 0 : layout_.back().end());
}

Weights::Weights(const NetworkSpec& spec, Eigen::VectorXd flat)
    : flat_(std::move(flat)), layout_(parameter_layout(spec)) {
  const Eigen::Index expected = layout_.empty() ? 0 : layout_.back().end();
  require(flat_.size() == expected, "weights: expected " + std::to_string(expected) +
                                        " parameters, got " + std::to_string(flat_.size()));
}

const ParamBlock& Weights::block_for_layer(std::size_t layer) const {
  for (const auto& b : layout_)
    if (b.layer == layer) return b;
  throw ContractViolation("layer " + std::to_string(layer) + " has no parameters");
}

Weights he_initialize(const NetworkSpec& spec, std::uint64_t seed) {
  Weights w(spec);
  Rng rng(splitmix64(seed ^ 0x5EEDC0DEULL));
  for (const auto& b : w.layout()) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(b.cols));
    auto m = w.matrix(b);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal(0.0, stddev);
  }
  return w;
}

WeightSlice search_slice(const NetworkSpec& spec, SliceMode mode) {
  const auto layout = parameter_layout(spec);
  std::vector<const ParamBlock*> fc;
  for (const auto& b : layout)
    if (spec.layers[b.layer].kind == LayerKind::fully_connected) fc.push_back(&b);
  const std::size_t want = mode == SliceMode::head ? 1 : 2;
  require(fc.size() >= want, "search_slice: network has too few fully connected layers");
  const ParamBlock& first = *fc[fc.size() - want];
  return WeightSlice{first.weight_offset, layout.back().end() - first.weight_offset, first.layer};
}

// ---------------------------------------------------------------------------
// Forward

Tensor<double> append_side(const Tensor<double>& state, const Eigen::VectorXd& side) {
  Eigen::VectorXd joined(state.shape.size() + side.size());
  joined << state.flattened(), side;
  return Tensor<double>::flat(joined);
}

Tensor<double> forward_layers(const NetworkSpec& spec, const Weights& weights, Tensor<double> state,
                              const Eigen::VectorXd& side, std::size_t begin, std::size_t end,
                              const ForwardOptions& options) {
  require(end <= spec.layers.size() && begin <= end, "forward: layer range out of bounds");
  const std::size_t first_fc = spec.first_fc_layer();
  if (begin == 0)
    require(state.shape == spec.input,
            "forward: input shape " + state.shape.str() + " != " + spec.input.str());
  for (std::size_t i = begin; i < end; ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::string name = layer_name(i, l);
    try {
      switch (l.kind) {
        case LayerKind::conv: {
          const ParamBlock& b = weights.block_for_layer(i);
          state = conv_forward(state, weights.matrix(b), weights.bias(b), l.kernel_h, l.kernel_w,
                               l.stride, l.padding);
          break;
        }
        case LayerKind::relu:
          state = relu(state);
          break;
        case LayerKind::maxpool:
          state = maxpool(state, l.window, l.stride);
          break;
        case LayerKind::fully_connected: {
          if (i == first_fc && side.size() > 0) {
            require(side.size() == spec.side_inputs, "expected " + std::to_string(spec.side_inputs) +
                                                         " side features, got " +
                                                         std::to_string(side.size()));
            state = append_side(state, side);
          }
          const ParamBlock& b = weights.block_for_layer(i);
          state = Tensor<double>::flat(
              fc_forward(state.flattened(), weights.matrix(b), weights.bias(b), l.activation));
          break;
        }
        case LayerKind::dropout:
          if (options.dropout_rng && l.probability > 0.0) {
            const double keep = 1.0 - l.probability;
            for (Eigen::Index k = 0; k < state.data.size(); ++k)
              state.data.data()[k] =
                  options.dropout_rng->uniform() < l.probability ? 0.0 : state.data.data()[k] / keep;
          }
          break;
        case LayerKind::softmax_classifier:
          state = Tensor<double>::flat(softmax<double>(state.flattened()));
          break;
      }
    } catch (const ContractViolation& e) {
      throw ContractViolation(name + ": " + e.what());
    }
    if (options.observer) options.observer(i, state);
  }
  return state;
}

namespace {

ForwardResult finish(const NetworkSpec& spec, const Weights& weights, Tensor<double> state,
                     const Eigen::VectorXd& side, std::size_t begin, const ForwardOptions& options) {
  std::size_t end = spec.layers.size();
  const bool has_softmax = end > 0 && spec.layers.back().kind == LayerKind::softmax_classifier;
  if (has_softmax) --end;
  state = forward_layers(spec, weights, std::move(state), side, begin, end, options);
  ForwardResult r;
  r.logits = state.flattened();
  r.probabilities = softmax<double>(r.logits);
  if (has_softmax && options.observer) options.observer(end, Tensor<double>::flat(r.probabilities));
  return r;
}

}  // namespace

ForwardResult forward(const NetworkSpec& spec, const Weights& weights, const Tensor<double>& image,
                      const Eigen::VectorXd& side, const ForwardOptions& options) {
  return finish(spec, weights, image, side, 0, options);
}

ForwardResult forward_from(const NetworkSpec& spec, const Weights& weights,
                           const Tensor<double>& activation, std::size_t begin,
                           const ForwardOptions& options) {
  return finish(spec, weights, activation, Eigen::VectorXd(), begin, options);
}

}  // namespace ghho
