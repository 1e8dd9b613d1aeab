#include "ghho/model_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ghho/errors.hpp"

namespace ghho {

namespace {

constexpr const char* kMagic = "GHHO-MODEL";
constexpr int kVersion = 1;

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string layer_line(const LayerSpec& l) {
  std::ostringstream os;
  os << "layer ";
  switch (l.kind) {
    case LayerKind::conv:
      os << "conv " << l.filters << ' ' << l.kernel_h << ' ' << l.kernel_w << ' ' << l.stride << ' '
         << l.padding;
      break;
    case LayerKind::relu: os << "relu"; break;
    case LayerKind::maxpool: os << "maxpool " << l.window << ' ' << l.stride; break;
    case LayerKind::fully_connected:
      os << "fc " << l.units << ' ' << (l.activation == Activation::relu ? "relu" : "identity");
      break;
    case LayerKind::dropout: os << "dropout " << exact(l.probability); break;
    case LayerKind::softmax_classifier: os << "softmax"; break;
  }
  return os.str();
}

LayerSpec parse_layer(std::istringstream& in) {
  std::string kind;
  in >> kind;
  LayerSpec l;
  if (kind == "conv") {
    l.kind = LayerKind::conv;
    in >> l.filters >> l.kernel_h >> l.kernel_w >> l.stride >> l.padding;
  } else if (kind == "relu") {
    l.kind = LayerKind::relu;
  } else if (kind == "maxpool") {
    l.kind = LayerKind::maxpool;
    in >> l.window >> l.stride;
  } else if (kind == "fc") {
    std::string act;
    l.kind = LayerKind::fully_connected;
    in >> l.units >> act;
    if (act != "relu" && act != "identity") throw DataError("model: unknown activation '" + act + "'");
    l.activation = act == "relu" ? Activation::relu : Activation::identity;
  } else if (kind == "dropout") {
    l.kind = LayerKind::dropout;
    in >> l.probability;
  } else if (kind == "softmax") {
    l.kind = LayerKind::softmax_classifier;
  } else {
    throw DataError("model: unknown layer kind '" + kind + "'");
  }
  if (in.fail()) throw DataError("model: malformed layer line");
  return l;
}

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_model(const Model& model) {
  model.spec.validate();
  require(model.weights.size() == Weights(model.spec).size(),
          "encode_model: weight count does not match the network spec");
  std::string payload;
  payload.reserve(static_cast<std::size_t>(model.weights.size()) * 8);
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) put_le(payload, model.weights.flat()[i]);

  std::ostringstream os;
  const auto& s = model.spec;
  os << kMagic << ' ' << kVersion << '\n';
  os << "input " << s.input.channels << ' ' << s.input.height << ' ' << s.input.width << '\n';
  os << "side " << s.side_inputs << '\n';
  for (const auto& l : s.layers) os << layer_line(l) << '\n';
  os << "scaler";
  for (int k = 0; k < 3; ++k) os << ' ' << exact(model.scaler.min[k]);
  for (int k = 0; k < 3; ++k) os << ' ' << exact(model.scaler.max[k]);
  os << '\n';
  os << "preprocess " << model.preprocess.median << ' ' << model.preprocess.normalize << ' '
     << model.preprocess.equalize << ' ' << model.use_otsu << '\n';
  os << "weights " << model.weights.size() << '\n';
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(reinterpret_cast<const unsigned char*>(payload.data()), payload.size())));
  os << "checksum " << hex << '\n';
  os << "end\n";
  return os.str() + payload;
}

Model decode_model(const std::string& bytes) {
  std::size_t pos = 0;
  const auto next_line = [&]() -> std::string {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw DataError("model: truncated header");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  Model m;
  m.spec.layers.clear();
  {
    std::istringstream in(next_line());
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != kMagic) throw DataError("model: not a model file");
    if (version != kVersion) throw DataError("model: unsupported version " + std::to_string(version));
  }
  Eigen::Index count = -1;
  std::string checksum;
  for (;;) {
    std::istringstream in(next_line());
    std::string key;
    in >> key;
    if (key == "end") break;
    if (key == "input") {
      in >> m.spec.input.channels >> m.spec.input.height >> m.spec.input.width;
    } else if (key == "side") {
      in >> m.spec.side_inputs;
    } else if (key == "layer") {
      m.spec.layers.push_back(parse_layer(in));
    } else if (key == "scaler") {
      for (int k = 0; k < 3; ++k) in >> m.scaler.min[k];
      for (int k = 0; k < 3; ++k) in >> m.scaler.max[k];
    } else if (key == "preprocess") {
      in >> m.preprocess.median >> m.preprocess.normalize >> m.preprocess.equalize >> m.use_otsu;
    } else if (key == "weights") {
      in >> count;
    } else if (key == "checksum") {
      in >> checksum;
    } else {
      throw DataError("model: unknown header key '" + key + "'");
    }
    if (in.fail()) throw DataError("model: malformed header line for '" + key + "'");
  }
  if (count < 0) throw DataError("model: missing weight count");

  try {
    m.spec.validate();
  } catch (const ContractViolation& e) {
    throw DataError(std::string("model: invalid network spec: ") + e.what());
  }
  const Eigen::Index expected = Weights(m.spec).size();
  if (count != expected)
    throw DataError("model: spec needs " + std::to_string(expected) + " weights, file declares " +
                    std::to_string(count));
  const std::size_t payload = static_cast<std::size_t>(count) * 8;
  if (bytes.size() - pos != payload)
    throw DataError("model: weight block is " + std::to_string(bytes.size() - pos) +
                    " bytes, expected " + std::to_string(payload));
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(raw, payload)));
  if (checksum != hex) throw DataError("model: checksum mismatch");

  Eigen::VectorXd flat(count);
  for (Eigen::Index i = 0; i < count; ++i) flat[i] = get_le(raw + 8 * i);
  m.weights = Weights(m.spec, std::move(flat));
  return m;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  const std::string bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_model(bytes);
}

}  // namespace ghho
