#include "ghho/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ghho/errors.hpp"
#include "ghho/parallel.hpp"
#include "ghho/random.hpp"
#include "ghho/resources.hpp"

namespace ghho {

// ---------------------------------------------------------------------------
// Data

std::size_t Dataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [s](const Sample& x) { return x.split == s; }));
}

std::vector<const Sample*> Dataset::select(Split s) const {
  std::vector<const Sample*> out;
  for (const auto& x : items)
    if (x.split == s) out.push_back(&x);
  return out;
}

void assign_split(Dataset& data, std::uint64_t seed, double train_fraction) {
  require(train_fraction > 0.0 && train_fraction <= 1.0, "assign_split: fraction outside (0, 1]");
  std::vector<std::size_t> order(data.items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(splitmix64(seed ^ 0x5B117ULL));
  // Fisher-Yates with our own index draw: std::shuffle is not specified
  // identically across standard libraries.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next() % i);
    std::swap(order[i - 1], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * order.size()));
  for (std::size_t k = 0; k < order.size(); ++k)
    data.items[order[k]].split = k < n_train ? Split::train : Split::test;
}

void prepare_sample(Sample& sample, const PreprocessOptions& preprocess, bool use_otsu,
                    const FeatureOptions& features) {
  SegmentationResult seg = segment_image(sample.image, preprocess, use_otsu);
  sample.features = dominant_features(seg.segments, seg.enhanced, features);
  sample.masked = std::move(seg.masked);
}

void prepare_dataset(Dataset& data, const PreprocessOptions& preprocess, bool use_otsu,
                     const FeatureOptions& features, std::size_t threads) {
  parallel_for(data.items.size(), threads,
               [&](std::size_t i) { prepare_sample(data.items[i], preprocess, use_otsu, features); });
}

Tensor<double> image_tensor(const GrayImage& image) {
  Tensor<double> t(Shape{1, image.rows(), image.cols()});
  t.data.row(0) = Eigen::Map<const Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>>(image.data(), image.size())
                      .cast<double>() / 255.0;
  return t;
}

Example make_example(const Sample& s, const FeatureScaler& scaler) {
  require(s.masked.size() > 0, "sample '" + s.id + "' has not been prepared");
  return Example{image_tensor(s.masked), scaler.apply(s.features), s.label};
}

// ---------------------------------------------------------------------------
// Fitness

double rmse(std::span<const Eigen::VectorXd> probabilities, std::span<const int> labels) {
  require(!probabilities.empty(), "rmse: empty batch");
  require(probabilities.size() == labels.size(), "rmse: probability/label count mismatch");
  double sum = 0.0;
  std::size_t terms = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    Eigen::VectorXd target = Eigen::VectorXd::Zero(probabilities[i].size());
    require(labels[i] >= 0 && labels[i] < target.size(), "rmse: label out of range");
    target[labels[i]] = 1.0;
    sum += (probabilities[i] - target).squaredNorm();
    terms += static_cast<std::size_t>(target.size());
  }
  return std::sqrt(sum / static_cast<double>(terms));
}

namespace {

Weights with_slice(const Weights& base, const WeightSlice& slice, const Eigen::VectorXd& values) {
  require(values.size() == slice.length, "slice has " + std::to_string(slice.length) +
                                             " parameters, got " + std::to_string(values.size()));
  Weights w = base;
  w.flat().segment(slice.offset, slice.length) = values;
  return w;
}

}  // namespace

double rmse_fitness(const Eigen::VectorXd& slice_values, const NetworkSpec& spec,
                    const Weights& base, const WeightSlice& slice, std::span<const Example> batch) {
  require(!batch.empty(), "rmse_fitness: empty batch");
  const Weights w = with_slice(base, slice, slice_values);
  std::vector<Eigen::VectorXd> probs;
  std::vector<int> labels;
  for (const auto& e : batch) {
    probs.push_back(forward(spec, w, e.input, e.side).probabilities);
    labels.push_back(e.label);
  }
  return rmse(probs, labels);
}

CachedHead::CachedHead(const NetworkSpec& spec, const Weights& base, const WeightSlice& slice,
                       std::span<const Example> examples, std::size_t threads)
    : spec_(&spec), slice_(slice), cache_(examples.size()), labels_(examples.size()) {
  const std::size_t first_fc = spec.first_fc_layer();
  for (const auto& b : base.layout()) layout_[b.layer] = b;
  require(slice.first_layer >= first_fc, "CachedHead: slice must lie in the fully connected head");
  parallel_for(examples.size(), threads, [&](std::size_t i) {
    const Example& e = examples[i];
    Tensor<double> conv = forward_layers(spec, base, e.input, e.side, 0, first_fc);
    Tensor<double> head_in = append_side(conv, e.side);
    cache_[i] = forward_layers(spec, base, std::move(head_in), Eigen::VectorXd(), first_fc,
                               slice.first_layer);
    labels_[i] = e.label;
  });
}

Eigen::VectorXd CachedHead::tail(const Eigen::VectorXd& slice_values, const Tensor<double>& cached) const {
  Eigen::VectorXd state = cached.flattened();
  const auto& layers = spec_->layers;
  for (std::size_t i = slice_.first_layer; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::fully_connected: {
        const ParamBlock& b = layout_.at(i);
        const double* base = slice_values.data() - slice_.offset;
        const Eigen::Map<const RowMatrix<double>> m(base + b.weight_offset, b.rows, b.cols);
        const Eigen::Map<const Eigen::VectorXd> bias(base + b.bias_offset, b.rows);
        state = fc_forward(state, m, bias, l.activation);
        break;
      }
      case LayerKind::relu: state = state.cwiseMax(0.0); break;
      case LayerKind::dropout: break;  // inference mode
      case LayerKind::softmax_classifier: return softmax<double>(state);
      default: throw ContractViolation("CachedHead: unexpected spatial layer in head");
    }
  }
  return softmax<double>(state);
}

Eigen::VectorXd CachedHead::probabilities(const Eigen::VectorXd& slice_values, std::size_t item) const {
  check(slice_values);
  return tail(slice_values, cache_.at(item));
}

std::vector<Eigen::VectorXd> CachedHead::all_probabilities(const Eigen::VectorXd& slice_values) const {
  check(slice_values);
  std::vector<Eigen::VectorXd> out;
  out.reserve(cache_.size());
  for (const auto& a : cache_) out.push_back(tail(slice_values, a));
  return out;
}

void CachedHead::check(const Eigen::VectorXd& slice_values) const {
  require(slice_values.size() == slice_.length, "slice has " + std::to_string(slice_.length) +
                                                    " parameters, got " +
                                                    std::to_string(slice_values.size()));
}

double CachedHead::rmse(const Eigen::VectorXd& slice_values) const {
  return ghho::rmse(all_probabilities(slice_values), labels_);
}

double CachedHead::rmse(const Eigen::VectorXd& slice_values, std::span<const std::size_t> subset) const {
  require(!subset.empty(), "rmse_fitness: empty batch");
  check(slice_values);
  std::vector<Eigen::VectorXd> probs;
  std::vector<int> labels;
  probs.reserve(subset.size());
  labels.reserve(subset.size());
  for (std::size_t i : subset) {
    probs.push_back(tail(slice_values, cache_.at(i)));
    labels.push_back(labels_[i]);
  }
  return ghho::rmse(probs, labels);
}

// ---------------------------------------------------------------------------
// Metrics

void ConfusionMatrix::add(int predicted, int actual) {
  if (actual == 1) {
    predicted == 1 ? ++tp : ++fn;
  } else {
    predicted == 1 ? ++fp : ++tn;
  }
}

Metrics metrics(const ConfusionMatrix& cm) {
  const auto ratio = [](double num, double den) -> std::optional<double> {
    if (den == 0.0) return std::nullopt;
    return num / den;
  };
  Metrics m;
  m.accuracy = ratio(static_cast<double>(cm.tp + cm.tn), static_cast<double>(cm.total()));
  m.precision = ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fp));
  m.recall = ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fn));
  if (m.precision && m.recall) m.f_measure = ratio(2.0 * *m.precision * *m.recall, *m.precision + *m.recall);
  return m;
}

int predicted_class(const Eigen::VectorXd& probabilities) {
  require(probabilities.size() > 0, "predicted_class: empty probability vector");
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < probabilities.size(); ++k)
    if (probabilities[k] > probabilities[best]) best = k;
  return static_cast<int>(best);
}

ConfusionMatrix confusion(std::span<const Eigen::VectorXd> probabilities, std::span<const int> labels) {
  require(probabilities.size() == labels.size(), "confusion: probability/label count mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) cm.add(predicted_class(probabilities[i]), labels[i]);
  return cm;
}

std::vector<RocPoint> roc_points(std::span<const double> positive_scores, std::span<const int> labels,
                                 std::span<const double> thresholds) {
  require(positive_scores.size() == labels.size(), "roc_points: score/label count mismatch");
  std::vector<RocPoint> out;
  out.reserve(thresholds.size());
  for (double tau : thresholds) {
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) cm.add(positive_scores[i] >= tau ? 1 : 0, labels[i]);
    const double negatives = static_cast<double>(cm.fp + cm.tn);
    const double positives = static_cast<double>(cm.tp + cm.fn);
    out.push_back({tau, negatives > 0 ? cm.fp / negatives : 0.0, positives > 0 ? cm.tp / positives : 0.0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classifier

Eigen::VectorXd Classifier::probabilities(const Example& e) const {
  return forward(spec, weights, e.input, e.side).probabilities;
}

Eigen::VectorXd Classifier::probabilities(const Sample& s) const {
  return probabilities(make_example(s, scaler));
}

namespace {

std::vector<Eigen::VectorXd> split_probabilities(const Classifier& net,
                                                 std::span<const Sample* const> split,
                                                 std::size_t threads) {
  std::vector<Eigen::VectorXd> probs(split.size());
  parallel_for(split.size(), threads, [&](std::size_t i) { probs[i] = net.probabilities(*split[i]); });
  return probs;
}

std::vector<int> split_labels(std::span<const Sample* const> split) {
  std::vector<int> labels;
  labels.reserve(split.size());
  for (const Sample* s : split) labels.push_back(s->label);
  return labels;
}

}  // namespace

ConfusionMatrix evaluate(const Classifier& net, std::span<const Sample* const> split, std::size_t threads) {
  return confusion(split_probabilities(net, split, threads), split_labels(split));
}

std::vector<RocPoint> roc_points(const Classifier& net, std::span<const Sample* const> split,
                                 std::span<const double> thresholds, std::size_t threads) {
  const auto probs = split_probabilities(net, split, threads);
  std::vector<double> scores;
  scores.reserve(probs.size());
  for (const auto& p : probs) scores.push_back(p.size() > 1 ? p[1] : 0.0);
  return roc_points(scores, split_labels(split), thresholds);
}

// ---------------------------------------------------------------------------
// Training

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::g_hho: return "g-hho";
    case Algorithm::hho: return "hho";
    case Algorithm::gwo: return "gwo";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "g-hho" || name == "ghho") return Algorithm::g_hho;
  if (name == "hho") return Algorithm::hho;
  if (name == "gwo") return Algorithm::gwo;
  throw ContractViolation("unknown algorithm '" + name + "' (expected g-hho, hho or gwo)");
}

namespace {

double accuracy_of(const ConfusionMatrix& cm) {
  return cm.total() ? static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total())
                    : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

TrainResult train(const Dataset& data, const NetworkSpec& spec, const TrainConfig& config) {
  const Stopwatch clock;
  spec.validate();
  const auto train_items = data.select(Split::train);
  const auto test_items = data.select(Split::test);
  require(train_items.size() >= 2, "train: training split needs at least 2 items");

  std::vector<FeatureVector> train_features;
  for (const Sample* s : train_items) train_features.push_back(s->features);
  const FeatureScaler scaler = FeatureScaler::fit(train_features);

  const auto examples_of = [&](const std::vector<const Sample*>& items) {
    std::vector<Example> out;
    out.reserve(items.size());
    for (const Sample* s : items) out.push_back(make_example(*s, scaler));
    return out;
  };
  const std::vector<Example> train_examples = examples_of(train_items);
  const std::vector<Example> test_examples = examples_of(test_items);

  const Weights base = he_initialize(spec, config.run.seed);
  const WeightSlice slice = search_slice(spec, config.slice);
  const CachedHead train_head(spec, base, slice, train_examples, config.run.threads);
  const CachedHead test_head(spec, base, slice, test_examples, config.run.threads);

  // Fixed batch for the whole run so the fitness stays deterministic.
  std::vector<std::size_t> batch(train_examples.size());
  std::iota(batch.begin(), batch.end(), std::size_t{0});
  {
    Rng rng(splitmix64(config.run.seed ^ 0xBA7C4ULL));
    for (std::size_t i = batch.size(); i > 1; --i)
      std::swap(batch[i - 1], batch[static_cast<std::size_t>(rng.next() % i)]);
  }
  batch.resize(std::min(config.batch_size, batch.size()));
  std::sort(batch.begin(), batch.end());

  const FitnessFn fitness = [&](const Vector& x) { return train_head.rmse(x, batch); };
  const SearchSpace space = SearchSpace::uniform(static_cast<std::size_t>(slice.length),
                                                 -config.weight_bound, config.weight_bound);

  TrainReport report;
  report.search_dimensions = static_cast<std::size_t>(slice.length);
  report.batch_size = batch.size();

  const auto on_iter = [&](const TraceRecord& r) {
    EpochRecord e;
    e.epoch = r.iteration;
    const auto train_probs = train_head.all_probabilities(r.best_position);
    e.train_loss = rmse(train_probs, train_head.labels());
    e.train_acc = accuracy_of(confusion(train_probs, train_head.labels()));
    if (test_head.size() > 0) {
      const auto test_probs = test_head.all_probabilities(r.best_position);
      e.test_loss = rmse(test_probs, test_head.labels());
      e.test_acc = accuracy_of(confusion(test_probs, test_head.labels()));
    } else {
      e.test_loss = e.test_acc = std::numeric_limits<double>::quiet_NaN();
    }
    report.curves.push_back(e);
  };

  OptimizeResult result;
  switch (config.algorithm) {
    case Algorithm::g_hho: result = g_hho_optimize(config.run, space, fitness, on_iter); break;
    case Algorithm::hho: result = hho_optimize(config.run, space, fitness, on_iter); break;
    case Algorithm::gwo: result = gwo_optimize(config.run, space, fitness, on_iter); break;
  }

  TrainResult out;
  out.classifier = Classifier{spec, with_slice(base, slice, result.best.position), scaler};
  report.initial_batch_rmse = result.trace.initial_best_fitness;
  report.final_batch_rmse = result.best.value();
  report.trace = std::move(result.trace);
  report.train_confusion =
      confusion(train_head.all_probabilities(result.best.position), train_head.labels());
  if (test_head.size() > 0)
    report.test_confusion = confusion(test_head.all_probabilities(result.best.position), test_head.labels());
  report.wall_seconds = clock.seconds();
  report.peak_memory_bytes = peak_memory_bytes();
  out.report = std::move(report);
  return out;
}

}  // namespace ghho
