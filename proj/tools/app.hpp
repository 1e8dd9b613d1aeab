#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ghho/features.hpp"
#include "ghho/network.hpp"
#include "ghho/segmentation.hpp"
#include "ghho/trainer.hpp"

namespace ghho::app {

namespace fs = std::filesystem;

/// Malformed or unknown configuration; maps to the usage exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_contract = 3 };

// ---------------------------------------------------------------------------
// Configuration

struct AugmentOp {
  enum class Kind { rotate90, rotate180, rotate270, flip_h, flip_v, brightness } kind = Kind::rotate90;
  int delta = 0;
  std::string name() const;
  static AugmentOp parse(const std::string& text);
};

struct AugmentRecipe {
  bool include_original = true;
  std::vector<AugmentOp> ops;
  std::size_t multiplier() const { return ops.size() + (include_original ? 1 : 0); }
  static AugmentRecipe standard();
};

struct BenchConfig {
  std::vector<std::string> functions{"sphere", "rastrigin", "rosenbrock", "ackley"};
  std::size_t dimension = 10;
  std::size_t population = 30;
  std::size_t iterations = 500;
  std::size_t seeds = 30;
  double hho_fraction = 0.5;
};

struct AppConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  PreprocessOptions preprocess;
  bool otsu = true;
  FeatureOptions features;
  NetworkSpec network = NetworkSpec::standard();
  TrainConfig train = default_train();
  double train_fraction = 0.7;
  AugmentRecipe augment = AugmentRecipe::standard();
  BenchConfig bench;

  static TrainConfig default_train();
  /// Copies seed and threads into the nested run settings.
  void sync();
};

/// JSON document; every key is optional, unknown keys throw ConfigError.
AppConfig parse_config(const std::string& text);
AppConfig load_config(const fs::path& path);

// ---------------------------------------------------------------------------
// Data

struct IngestStats {
  std::size_t loaded = 0;
  std::size_t skipped = 0;
};

/// Labelled images from `dir`, either through a CSV of filename,label rows
/// (label yes/no or 1/0) or from yes/ and no/ subfolders. Unreadable files
/// are reported on `warn` and skipped; an empty result throws DataError.
/// Every image is padded to a square and resized to `size`.
Dataset ingest(const fs::path& dir, const std::optional<fs::path>& labels, int size, std::ostream& warn,
               IngestStats* stats = nullptr);

/// Unlabelled images from files and directories (searched recursively, sorted).
Dataset ingest_unlabelled(const std::vector<fs::path>& inputs, int size, std::ostream& warn,
                          IngestStats* stats = nullptr);

/// Applies the recipe to every item; output count is input count times the
/// multiplier. Items keep their labels, ids gain an op suffix.
Dataset augment(const Dataset& data, const AugmentRecipe& recipe);

GrayImage apply_op(const GrayImage& image, const AugmentOp& op);

/// Writes items as PGM under dir/yes and dir/no.
void write_dataset(const Dataset& data, const fs::path& dir);

// ---------------------------------------------------------------------------
// Entry point

/// Full command line, including argv[0]. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ghho::app
