#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghho/features.hpp"
#include "ghho/image.hpp"
#include "ghho/model_io.hpp"
#include "ghho/network.hpp"
#include "ghho/optimizer.hpp"
#include "ghho/segmentation.hpp"

namespace ghho {

// ---------------------------------------------------------------------------
// Data

enum class Split { train, test };

struct Sample {
  std::string id;
  GrayImage image;   // network-sized raw image
  int label = 0;     // 1 = tumor (positive), 0 = no tumor
  Split split = Split::train;

  // Filled by prepare_dataset.
  GrayImage masked;
  FeatureVector features;
};

struct Dataset {
  std::vector<Sample> items;

  std::size_t count(Split s) const;
  std::vector<const Sample*> select(Split s) const;
};

/// Seeded shuffle; the first floor(train_fraction * n) shuffled items train.
void assign_split(Dataset& data, std::uint64_t seed, double train_fraction = 0.7);

/// Runs segmentation and feature extraction on every item.
void prepare_sample(Sample& sample, const PreprocessOptions& preprocess, bool use_otsu,
                    const FeatureOptions& features = {});
void prepare_dataset(Dataset& data, const PreprocessOptions& preprocess, bool use_otsu,
                     const FeatureOptions& features = {}, std::size_t threads = 1);

/// Network-ready view of a sample.
struct Example {
  Tensor<double> input;   // masked image scaled to [0, 1]
  Eigen::VectorXd side;   // scaled features
  int label = 0;
};

Tensor<double> image_tensor(const GrayImage& image);
Example make_example(const Sample& s, const FeatureScaler& scaler);

// ---------------------------------------------------------------------------
// Fitness

/// Root mean squared error between class probabilities and one-hot targets,
/// over all items and classes.
double rmse(std::span<const Eigen::VectorXd> probabilities, std::span<const int> labels);

/// Reference fitness: installs `slice_values` into a scratch copy of `base`
/// and runs the full inference-mode forward pass on every example.
double rmse_fitness(const Eigen::VectorXd& slice_values, const NetworkSpec& spec,
                    const Weights& base, const WeightSlice& slice, std::span<const Example> batch);

/// Same value as rmse_fitness, computed from activations cached at the input
/// of the slice's first layer. Parameters outside the slice never change, so
/// the cache stays valid for the whole run. Keeps a pointer to `spec`.
class CachedHead {
 public:
  CachedHead(const NetworkSpec& spec, const Weights& base, const WeightSlice& slice,
             std::span<const Example> examples, std::size_t threads = 1);

  std::size_t size() const { return labels_.size(); }
  std::span<const int> labels() const { return labels_; }

  Eigen::VectorXd probabilities(const Eigen::VectorXd& slice_values, std::size_t item) const;
  std::vector<Eigen::VectorXd> all_probabilities(const Eigen::VectorXd& slice_values) const;
  double rmse(const Eigen::VectorXd& slice_values) const;
  /// Indices into the cache used as the fitness batch.
  double rmse(const Eigen::VectorXd& slice_values, std::span<const std::size_t> subset) const;

 private:
  void check(const Eigen::VectorXd& slice_values) const;
  Eigen::VectorXd tail(const Eigen::VectorXd& slice_values, const Tensor<double>& cached) const;

  const NetworkSpec* spec_;
  WeightSlice slice_;
  std::map<std::size_t, ParamBlock> layout_;
  std::vector<Tensor<double>> cache_;
  std::vector<int> labels_;
};

// ---------------------------------------------------------------------------
// Metrics

struct ConfusionMatrix {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  void add(int predicted, int actual);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// A metric is empty when its denominator is zero.
struct Metrics {
  std::optional<double> accuracy, precision, recall, f_measure;
};

Metrics metrics(const ConfusionMatrix& cm);

/// argmax, ties to class 0.
int predicted_class(const Eigen::VectorXd& probabilities);

ConfusionMatrix confusion(std::span<const Eigen::VectorXd> probabilities, std::span<const int> labels);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

/// Positive iff score >= threshold. A rate with an empty denominator is 0.
std::vector<RocPoint> roc_points(std::span<const double> positive_scores, std::span<const int> labels,
                                 std::span<const double> thresholds);

// ---------------------------------------------------------------------------
// Classifier

struct Classifier {
  NetworkSpec spec;
  Weights weights;
  FeatureScaler scaler;

  Eigen::VectorXd probabilities(const Example& e) const;
  Eigen::VectorXd probabilities(const Sample& s) const;
};

ConfusionMatrix evaluate(const Classifier& net, std::span<const Sample* const> split,
                         std::size_t threads = 1);
std::vector<RocPoint> roc_points(const Classifier& net, std::span<const Sample* const> split,
                                 std::span<const double> thresholds, std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Training

enum class Algorithm { g_hho, hho, gwo };
std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct TrainConfig {
  RunConfig run{20, 100, 0, 0.5, 1.5, 1};
  Algorithm algorithm = Algorithm::g_hho;
  SliceMode slice = SliceMode::head;
  std::size_t batch_size = 1024;
  double weight_bound = 1.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0, test_loss = 0, train_acc = 0, test_acc = 0;
};

struct TrainReport {
  Trace trace;
  std::vector<EpochRecord> curves;
  ConfusionMatrix train_confusion, test_confusion;
  double initial_batch_rmse = 0.0;
  double final_batch_rmse = 0.0;
  std::size_t search_dimensions = 0;
  std::size_t batch_size = 0;
  double wall_seconds = 0.0;
  std::uint64_t peak_memory_bytes = 0;
};

struct TrainResult {
  Classifier classifier;
  TrainReport report;
};

/// Searches the configured weight slice with the chosen optimizer, using the
/// batch RMSE as fitness. Items must already be prepared.
TrainResult train(const Dataset& data, const NetworkSpec& spec, const TrainConfig& config);

}  // namespace ghho
