#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "app.hpp"

namespace ghho::app {

using nlohmann::json;

std::string AugmentOp::name() const {
  switch (kind) {
    case Kind::rotate90: return "rotate90";
    case Kind::rotate180: return "rotate180";
    case Kind::rotate270: return "rotate270";
    case Kind::flip_h: return "flip_h";
    case Kind::flip_v: return "flip_v";
    case Kind::brightness: return (delta >= 0 ? "brightness+" : "brightness-") + std::to_string(std::abs(delta));
  }
  return "?";
}

AugmentOp AugmentOp::parse(const std::string& text) {
  AugmentOp op;
  if (text == "rotate90") op.kind = Kind::rotate90;
  else if (text == "rotate180") op.kind = Kind::rotate180;
  else if (text == "rotate270") op.kind = Kind::rotate270;
  else if (text == "flip_h") op.kind = Kind::flip_h;
  else if (text == "flip_v") op.kind = Kind::flip_v;
  else if (text.rfind("brightness", 0) == 0 && text.size() > 11 && (text[10] == '+' || text[10] == '-')) {
    op.kind = Kind::brightness;
    std::size_t used = 0;
    int magnitude = 0;
    try {
      magnitude = std::stoi(text.substr(11), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() - 11 || magnitude < 0 || magnitude > 255)
      throw ConfigError("bad brightness op '" + text + "'");
    op.delta = text[10] == '+' ? magnitude : -magnitude;
  } else {
    throw ConfigError("unknown augmentation op '" + text + "'");
  }
  return op;
}

AugmentRecipe AugmentRecipe::standard() {
  AugmentRecipe r;
  for (const char* name : {"rotate90", "rotate180", "rotate270", "flip_h", "flip_v", "brightness+10", "brightness-10"})
    r.ops.push_back(AugmentOp::parse(name));
  return r;
}

TrainConfig AppConfig::default_train() {
  TrainConfig t;
  t.run.population = 30;
  t.run.max_iterations = 500;
  t.batch_size = 1024;
  return t;
}

void AppConfig::sync() {
  train.run.seed = seed;
  train.run.threads = threads;
}

namespace {

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

std::size_t read_count(const json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

NetworkSpec parse_network(const json& j) {
  only_keys(j, {"input_size", "conv", "pool_window", "pool_stride", "hidden_units", "dropout"}, "network");
  const NetworkSpec def = NetworkSpec::standard();
  int input = static_cast<int>(def.input.height);
  int pool_window = 3, pool_stride = 2, hidden = 512;
  double dropout = 0.5;
  read(j, "input_size", input, "network");
  read(j, "pool_window", pool_window, "network");
  read(j, "pool_stride", pool_stride, "network");
  read(j, "hidden_units", hidden, "network");
  read(j, "dropout", dropout, "network");
  struct Conv {
    int filters, kernel, stride, padding;
  };
  std::vector<Conv> convs{{52, 7, 2, 0}, {256, 5, 2, 0}, {156, 3, 2, 0}};
  if (j.contains("conv")) {
    if (!j.at("conv").is_array() || j.at("conv").empty()) throw ConfigError("network.conv: expected a non-empty array");
    convs.clear();
    for (const auto& c : j.at("conv")) {
      only_keys(c, {"filters", "kernel", "stride", "padding"}, "network.conv[]");
      Conv v{0, 0, 1, 0};
      if (!c.contains("filters") || !c.contains("kernel")) throw ConfigError("network.conv[]: filters and kernel are required");
      read(c, "filters", v.filters, "network.conv[]");
      read(c, "kernel", v.kernel, "network.conv[]");
      read(c, "stride", v.stride, "network.conv[]");
      read(c, "padding", v.padding, "network.conv[]");
      convs.push_back(v);
    }
  }
  if (input < 1 || hidden < 1 || pool_window < 1 || pool_stride < 1 || dropout < 0 || dropout >= 1)
    throw ConfigError("network: value out of range");
  NetworkSpec spec;
  spec.input = {1, input, input};
  spec.side_inputs = def.side_inputs;
  for (const auto& c : convs) {
    if (c.filters < 1 || c.kernel < 1 || c.stride < 1 || c.padding < 0) throw ConfigError("network.conv[]: value out of range");
    spec.layers.push_back(LayerSpec::conv(c.filters, c.kernel, c.stride, c.padding));
    spec.layers.push_back(LayerSpec::relu_layer());
    spec.layers.push_back(LayerSpec::maxpool(pool_window, pool_stride));
  }
  spec.layers.push_back(LayerSpec::fully_connected(hidden, Activation::relu));
  spec.layers.push_back(LayerSpec::dropout(dropout));
  spec.layers.push_back(LayerSpec::fully_connected(2, Activation::identity));
  spec.layers.push_back(LayerSpec::softmax());
  try {
    spec.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
  return spec;
}

}  // namespace

AppConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, {"seed", "threads", "preprocess", "otsu", "features", "network", "optimizer", "split", "augment", "bench"},
            "config");
  AppConfig c;
  if (j.contains("seed")) c.seed = read_count(j, "seed", 0, "config");
  c.threads = read_count(j, "threads", c.threads, "config");
  read(j, "otsu", c.otsu, "config");
  if (j.contains("preprocess")) {
    const auto& p = j.at("preprocess");
    only_keys(p, {"median", "normalize", "equalize"}, "preprocess");
    read(p, "median", c.preprocess.median, "preprocess");
    read(p, "normalize", c.preprocess.normalize, "preprocess");
    read(p, "equalize", c.preprocess.equalize, "preprocess");
  }
  if (j.contains("features")) {
    const auto& f = j.at("features");
    only_keys(f, {"squared_variance"}, "features");
    read(f, "squared_variance", c.features.squared_variance, "features");
  }
  if (j.contains("network")) c.network = parse_network(j.at("network"));
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    only_keys(o, {"algorithm", "population", "iterations", "hho_fraction", "beta", "slice", "batch_size", "weight_bound"},
              "optimizer");
    if (o.contains("algorithm")) {
      std::string name;
      read(o, "algorithm", name, "optimizer");
      try {
        c.train.algorithm = parse_algorithm(name);
      } catch (const std::exception&) {
        throw ConfigError("optimizer.algorithm: unknown '" + name + "'");
      }
    }
    c.train.run.population = read_count(o, "population", c.train.run.population, "optimizer");
    c.train.run.max_iterations = read_count(o, "iterations", c.train.run.max_iterations, "optimizer");
    read(o, "hho_fraction", c.train.run.hho_fraction, "optimizer");
    read(o, "beta", c.train.run.beta, "optimizer");
    c.train.batch_size = read_count(o, "batch_size", c.train.batch_size, "optimizer");
    read(o, "weight_bound", c.train.weight_bound, "optimizer");
    if (o.contains("slice")) {
      std::string s;
      read(o, "slice", s, "optimizer");
      if (s == "head") c.train.slice = SliceMode::head;
      else if (s == "head_and_hidden") c.train.slice = SliceMode::head_and_hidden;
      else throw ConfigError("optimizer.slice: expected head or head_and_hidden");
    }
    if (c.train.run.population < 1 || c.train.run.max_iterations < 1 || c.train.batch_size < 1 ||
        c.train.weight_bound <= 0 || c.train.run.hho_fraction < 0 || c.train.run.hho_fraction > 1 ||
        c.train.run.beta <= 1 || c.train.run.beta > 2)
      throw ConfigError("optimizer: value out of range");
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    only_keys(s, {"train_fraction"}, "split");
    read(s, "train_fraction", c.train_fraction, "split");
    if (c.train_fraction <= 0 || c.train_fraction >= 1) throw ConfigError("split.train_fraction must lie in (0, 1)");
  }
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    only_keys(a, {"include_original", "ops"}, "augment");
    read(a, "include_original", c.augment.include_original, "augment");
    if (a.contains("ops")) {
      std::vector<std::string> names;
      read(a, "ops", names, "augment");
      c.augment.ops.clear();
      for (const auto& n : names) c.augment.ops.push_back(AugmentOp::parse(n));
    }
  }
  if (j.contains("bench")) {
    const auto& b = j.at("bench");
    only_keys(b, {"functions", "dimension", "population", "iterations", "seeds", "hho_fraction"}, "bench");
    read(b, "functions", c.bench.functions, "bench");
    for (const auto& f : c.bench.functions) {
      try {
        benchmark_function(f);
      } catch (const ContractViolation&) {
        throw ConfigError("bench.functions: unknown '" + f + "'");
      }
    }
    c.bench.dimension = read_count(b, "dimension", c.bench.dimension, "bench");
    c.bench.population = read_count(b, "population", c.bench.population, "bench");
    c.bench.iterations = read_count(b, "iterations", c.bench.iterations, "bench");
    c.bench.seeds = read_count(b, "seeds", c.bench.seeds, "bench");
    read(b, "hho_fraction", c.bench.hho_fraction, "bench");
    if (c.bench.dimension < 1 || c.bench.population < 1 || c.bench.iterations < 2 || c.bench.seeds < 1)
      throw ConfigError("bench: value out of range");
  }
  if (c.threads < 1) throw ConfigError("config.threads must be >= 1");
  c.sync();
  return c;
}

AppConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ghho::app
