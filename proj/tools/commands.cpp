#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "app.hpp"
#include "ghho/errors.hpp"
#include "ghho/image.hpp"
#include "ghho/model_io.hpp"
#include "ghho/optimizer.hpp"
#include "ghho/resources.hpp"
#include "ghho/synthetic.hpp"

namespace ghho::app {

using nlohmann::json;

namespace {

struct Globals {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  fs::path out = "ghho-out";
};

struct Context {
  AppConfig config;
  fs::path out;
  std::ostream& log;
  std::ostream& warn;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double mb(std::uint64_t bytes) { return static_cast<double>(bytes) / (1024.0 * 1024.0); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json metrics_json(const ConfusionMatrix& cm) {
  const Metrics m = metrics(cm);
  json j;
  j["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
  const auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? json(*v) : json(nullptr);
    j["rounded"][key] = v ? json(fixed(*v, 2)) : json(nullptr);
  };
  put("accuracy", m.accuracy);
  put("precision", m.precision);
  put("recall", m.recall);
  put("f_measure", m.f_measure);
  return j;
}

void prepare(Dataset& data, const Context& ctx) {
  prepare_dataset(data, ctx.config.preprocess, ctx.config.otsu, ctx.config.features, ctx.config.threads);
}

int image_size(const Context& ctx) { return static_cast<int>(ctx.config.network.input.height); }

// ---------------------------------------------------------------------------

int cmd_segment(const Context& ctx, const std::vector<fs::path>& inputs) {
  Dataset data = ingest_unlabelled(inputs, image_size(ctx), ctx.warn);
  json report = json::array();
  for (auto& item : data.items) {
    const SegmentationResult r = segment_image(item.image, ctx.config.preprocess, ctx.config.otsu);
    std::string flat = item.id;
    std::replace(flat.begin(), flat.end(), '/', '_');
    const std::string mask_name = fs::path(flat).replace_extension(".mask.pgm").string();
    fs::create_directories(ctx.out / "masks");
    write_pgm(ctx.out / "masks" / mask_name, r.mask.to_image());
    report.push_back({{"image", item.id},
                      {"threshold", r.mask.threshold},
                      {"degenerate", r.degenerate},
                      {"mask_pixels", r.mask.count()},
                      {"segments", r.segments.size()},
                      {"mask", "masks/" + mask_name}});
  }
  write_json(ctx.out / "segment.json", report);
  ctx.log << "segmented " << data.items.size() << " image(s) into " << (ctx.out / "masks").string() << '\n';
  return exit_ok;
}

int cmd_features(const Context& ctx, const std::vector<fs::path>& inputs) {
  Dataset data = ingest_unlabelled(inputs, image_size(ctx), ctx.warn);
  std::ostringstream csv;
  csv << "image_id,segment_label,mean,variance,tumor_size\n";
  std::size_t rows = 0;
  for (auto& item : data.items) {
    const SegmentationResult r = segment_image(item.image, ctx.config.preprocess, ctx.config.otsu);
    const auto fs_ = build_feature_vectors(r.segments, r.enhanced, ctx.config.features);
    for (std::size_t k = 0; k < fs_.size(); ++k, ++rows)
      csv << item.id << ',' << r.segments[k].label << ',' << exact(fs_[k].mean) << ',' << exact(fs_[k].variance) << ','
          << exact(fs_[k].tumor_size) << '\n';
  }
  write_text(ctx.out / "features.csv", csv.str());
  ctx.log << "wrote " << rows << " segment row(s) to " << (ctx.out / "features.csv").string() << '\n';
  return exit_ok;
}

int cmd_train(const Context& ctx, const fs::path& dir, const std::optional<fs::path>& labels) {
  const Stopwatch clock;
  Dataset data = ingest(dir, labels, image_size(ctx), ctx.warn);
  assign_split(data, ctx.config.seed, ctx.config.train_fraction);
  prepare(data, ctx);
  const TrainResult r = train(data, ctx.config.network, ctx.config.train);
  const TrainReport& rep = r.report;

  Model model{ctx.config.network, r.classifier.weights, r.classifier.scaler, ctx.config.preprocess, ctx.config.otsu};
  save_model(ctx.out / "model.ghho", model);

  json j;
  j["algorithm"] = to_string(ctx.config.train.algorithm);
  j["seed"] = ctx.config.seed;
  j["population"] = ctx.config.train.run.population;
  j["iterations"] = ctx.config.train.run.max_iterations;
  j["search_dimensions"] = rep.search_dimensions;
  j["batch_size"] = rep.batch_size;
  j["train_items"] = data.count(Split::train);
  j["test_items"] = data.count(Split::test);
  j["evaluations"] = rep.trace.evaluations;
  j["initial_batch_rmse"] = rep.initial_batch_rmse;
  j["final_batch_rmse"] = rep.final_batch_rmse;
  j["train"] = metrics_json(rep.train_confusion);
  j["test"] = metrics_json(rep.test_confusion);
  write_json(ctx.out / "train_report.json", j);
  write_json(ctx.out / "train_resources.json",
             {{"wall_seconds", clock.seconds()}, {"train_seconds", rep.wall_seconds},
              {"peak_memory_mb", fixed(mb(rep.peak_memory_bytes), 3)}});

  std::ostringstream trace;
  trace << "iteration,phase,best_fitness,evaluations\n";
  for (const auto& t : rep.trace.records)
    trace << t.iteration << ',' << to_string(t.phase) << ',' << exact(t.best_fitness) << ',' << t.evaluations << '\n';
  write_text(ctx.out / "trace.csv", trace.str());

  std::ostringstream curves;
  curves << "epoch,train_loss,test_loss,train_acc,test_acc\n";
  for (const auto& e : rep.curves)
    curves << e.epoch << ',' << exact(e.train_loss) << ',' << exact(e.test_loss) << ',' << exact(e.train_acc) << ','
           << exact(e.test_acc) << '\n';
  write_text(ctx.out / "curves.csv", curves.str());

  std::vector<double> thresholds;
  for (int k = 0; k <= 20; ++k) thresholds.push_back(k / 20.0);
  const auto test_items = data.select(Split::test);
  std::ostringstream roc;
  roc << "threshold,fpr,tpr\n";
  for (const auto& p : roc_points(r.classifier, test_items, thresholds, ctx.config.threads))
    roc << exact(p.threshold) << ',' << exact(p.fpr) << ',' << exact(p.tpr) << '\n';
  write_text(ctx.out / "roc.csv", roc.str());

  std::ostringstream split;
  split << "image_id,label,split\n";
  for (const auto& s : data.items) split << s.id << ',' << s.label << ',' << (s.split == Split::train ? "train" : "test") << '\n';
  write_text(ctx.out / "split.csv", split.str());

  const Metrics m = metrics(rep.test_confusion);
  ctx.log << "trained " << to_string(ctx.config.train.algorithm) << " on " << data.count(Split::train) << " item(s); batch rmse "
          << fixed(rep.initial_batch_rmse, 4) << " -> " << fixed(rep.final_batch_rmse, 4);
  if (m.accuracy) ctx.log << "; test accuracy " << fixed(*m.accuracy, 4);
  ctx.log << "\nmodel written to " << (ctx.out / "model.ghho").string() << '\n';
  return exit_ok;
}

Classifier classifier_of(const Model& m) { return Classifier{m.spec, m.weights, m.scaler}; }

void prepare_with_model(Dataset& data, const Model& model, const Context& ctx) {
  prepare_dataset(data, model.preprocess, model.use_otsu, ctx.config.features, ctx.config.threads);
}

int cmd_predict(const Context& ctx, const fs::path& model_path, const std::vector<fs::path>& inputs) {
  const Model model = load_model(model_path);
  Dataset data = ingest_unlabelled(inputs, static_cast<int>(model.spec.input.height), ctx.warn);
  prepare_with_model(data, model, ctx);
  const Classifier net = classifier_of(model);
  json preds = json::array();
  for (const auto& s : data.items) {
    const Eigen::VectorXd p = net.probabilities(s);
    const int cls = predicted_class(p);
    preds.push_back({{"image", s.id}, {"label", cls == 1 ? "yes" : "no"}, {"class", cls},
                     {"probability", p[cls]}, {"p_tumor", p[1]}});
    ctx.log << s.id << ' ' << (cls == 1 ? "yes" : "no") << ' ' << fixed(p[cls], 4) << '\n';
  }
  write_json(ctx.out / "predictions.json", {{"predictions", preds}});
  return exit_ok;
}

ConfusionMatrix parse_cm(const std::string& text) {
  std::vector<std::uint64_t> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    long long x = -1;
    try {
      x = std::stoll(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || x < 0) throw CLI::ValidationError("--cm", "expected four non-negative integers tp,fp,fn,tn");
    v.push_back(static_cast<std::uint64_t>(x));
  }
  if (v.size() != 4) throw CLI::ValidationError("--cm", "expected four non-negative integers tp,fp,fn,tn");
  return {v[0], v[1], v[2], v[3]};
}

int cmd_evaluate(const Context& ctx, const ConfusionMatrix& cm) {
  const json j = metrics_json(cm);
  write_json(ctx.out / "metrics.json", j);
  const Metrics m = metrics(cm);
  const auto show = [](const std::optional<double>& v) { return v ? fixed(*v, 4) + " (" + fixed(*v, 2) + ")" : std::string("undefined"); };
  ctx.log << "accuracy  " << show(m.accuracy) << "\nprecision " << show(m.precision) << "\nrecall    " << show(m.recall)
          << "\nf_measure " << show(m.f_measure) << '\n';
  return exit_ok;
}

int cmd_evaluate_model(const Context& ctx, const fs::path& model_path, const fs::path& dir,
                       const std::optional<fs::path>& labels, const std::string& which) {
  const Model model = load_model(model_path);
  Dataset data = ingest(dir, labels, static_cast<int>(model.spec.input.height), ctx.warn);
  assign_split(data, ctx.config.seed, ctx.config.train_fraction);
  prepare_with_model(data, model, ctx);
  std::vector<const Sample*> items;
  for (const auto& s : data.items)
    if (which == "all" || (which == "test") == (s.split == Split::test)) items.push_back(&s);
  return cmd_evaluate(ctx, evaluate(classifier_of(model), items, ctx.config.threads));
}

int cmd_bench(const Context& ctx) {
  const BenchConfig& b = ctx.config.bench;
  struct Row {
    std::string algorithm, function;
    double median, mean_seconds, peak_mb;
  };
  std::vector<Row> rows;
  for (const Algorithm algo : {Algorithm::hho, Algorithm::gwo, Algorithm::g_hho}) {
    for (const auto& name : b.functions) {
      const BenchmarkFunction& f = benchmark_function(name);
      const SearchSpace space = SearchSpace::uniform(b.dimension, f.lower, f.upper);
      std::vector<double> best;
      double seconds = 0;
      for (std::size_t s = 0; s < b.seeds; ++s) {
        RunConfig run{b.population, b.iterations, ctx.config.seed + s, b.hho_fraction, 1.5, ctx.config.threads};
        const Stopwatch sw;
        OptimizeResult r;
        switch (algo) {
          case Algorithm::hho: r = hho_optimize(run, space, f.fn); break;
          case Algorithm::gwo: r = gwo_optimize(run, space, f.fn); break;
          case Algorithm::g_hho: r = g_hho_optimize(run, space, f.fn); break;
        }
        seconds += sw.seconds();
        best.push_back(r.best.value());
      }
      std::sort(best.begin(), best.end());
      const std::size_t n = best.size();
      const double median = n % 2 ? best[n / 2] : 0.5 * (best[n / 2 - 1] + best[n / 2]);
      rows.push_back({to_string(algo), name, median, seconds / static_cast<double>(n), mb(peak_memory_bytes())});
    }
  }
  std::ostringstream results, resources;
  results << "algorithm,function,dimension,seeds,median_best_fitness\n";
  resources << "algorithm,function,mean_seconds,peak_memory_mb\n";
  ctx.log << "algorithm  function     median_best      mean_s     peak_MB\n";
  for (const auto& r : rows) {
    results << r.algorithm << ',' << r.function << ',' << b.dimension << ',' << b.seeds << ',' << exact(r.median) << '\n';
    resources << r.algorithm << ',' << r.function << ',' << fixed(r.mean_seconds, 6) << ',' << fixed(r.peak_mb, 3) << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %-12s %12.4e %11.6f %11.3f\n", r.algorithm.c_str(), r.function.c_str(), r.median,
                  r.mean_seconds, r.peak_mb);
    ctx.log << line;
  }
  write_text(ctx.out / "bench.csv", results.str());
  write_text(ctx.out / "bench_resources.csv", resources.str());
  return exit_ok;
}

int cmd_augment(const Context& ctx, const fs::path& dir, const std::optional<fs::path>& labels) {
  const Dataset data = ingest(dir, labels, image_size(ctx), ctx.warn);
  const Dataset out = augment(data, ctx.config.augment);
  write_dataset(out, ctx.out);
  ctx.log << "augmented " << data.items.size() << " image(s) into " << out.items.size() << " (x"
          << ctx.config.augment.multiplier() << ") under " << ctx.out.string() << '\n';
  return exit_ok;
}

int cmd_synth(const Context& ctx, std::size_t count) {
  BlobOptions o;
  o.size = image_size(ctx);
  // keep the square's area fraction when the network input is not 143
  const double scale = o.size / 143.0;
  o.blob_min = std::max(1, static_cast<int>(std::lround(o.blob_min * scale)));
  o.blob_max = std::max(o.blob_min, static_cast<int>(std::lround(o.blob_max * scale)));
  const Dataset data = synthetic_blobs(count, ctx.config.seed, o);
  write_dataset(data, ctx.out);
  ctx.log << "wrote " << count << " synthetic image(s) under " << ctx.out.string() << '\n';
  return exit_ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Brain tumour MRI classification trained with a hybrid Harris hawks / grey wolf optimizer", "ghho"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for splits, initialisation and search");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  std::vector<fs::path> inputs;
  fs::path data_dir, model_path;
  std::optional<fs::path> labels;
  std::string cm_text, which = "all";
  std::size_t count = 200;
  std::optional<std::string> algorithm;
  std::optional<std::size_t> iterations, population, dim, seeds;
  std::vector<std::string> functions;

  auto* seg = app.add_subcommand("segment", "Otsu segmentation; writes PGM masks and a threshold report");
  seg->add_option("inputs", inputs, "Image files or directories")->required();
  auto* feat = app.add_subcommand("features", "Per-segment mean, variance and tumour size as CSV");
  feat->add_option("inputs", inputs, "Image files or directories")->required();

  auto* tr = app.add_subcommand("train", "Train the classifier head and write a model file with reports");
  tr->add_option("--data", data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--labels", labels, "CSV of filename,label (yes/no); default: yes/ and no/ folders");
  tr->add_option("--algorithm", algorithm, "g-hho, hho or gwo");
  tr->add_option("--iterations", iterations, "Optimizer iterations")->check(CLI::PositiveNumber);
  tr->add_option("--population", population, "Search agents")->check(CLI::PositiveNumber);

  auto* pr = app.add_subcommand("predict", "Classify images with a trained model");
  pr->add_option("--model", model_path, "Model file")->required();
  pr->add_option("inputs", inputs, "Image files or directories")->required();

  auto* ev = app.add_subcommand("evaluate", "Metrics from a confusion matrix or from a model on labelled data");
  auto* cm_opt = ev->add_option("--cm", cm_text, "Stored confusion matrix tp,fp,fn,tn");
  auto* ev_model = ev->add_option("--model", model_path, "Model file");
  auto* ev_data = ev->add_option("--data", data_dir, "Labelled dataset directory")->check(CLI::ExistingDirectory);
  ev->add_option("--labels", labels, "CSV of filename,label");
  ev->add_option("--split", which, "Items to score: all, train or test")->check(CLI::IsMember({"all", "train", "test"}));
  cm_opt->excludes(ev_model)->excludes(ev_data);
  ev_model->needs(ev_data);
  ev_data->needs(ev_model);

  auto* bench = app.add_subcommand("bench-opt", "Benchmark HHO, GWO and G-HHO on the test functions");
  bench->add_option("--functions", functions, "Subset of sphere, rastrigin, rosenbrock, ackley");
  bench->add_option("--dim", dim, "Dimension")->check(CLI::PositiveNumber);
  bench->add_option("--seeds", seeds, "Runs per cell")->check(CLI::PositiveNumber);
  bench->add_option("--iterations", iterations, "Iterations per run")->check(CLI::Range(2u, 1000000u));
  bench->add_option("--population", population, "Search agents")->check(CLI::PositiveNumber);

  auto* aug = app.add_subcommand("augment", "Write rotated, flipped and brightness-shifted copies of a dataset");
  aug->add_option("--data", data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  aug->add_option("--labels", labels, "CSV of filename,label");

  auto* syn = app.add_subcommand("synth", "Write a seeded bright-square toy dataset");
  syn->add_option("--count", count, "Number of images")->check(CLI::PositiveNumber)->capture_default_str();

  std::optional<ConfusionMatrix> stored_cm;
  try {
    app.parse(argc, argv);
    if (ev->parsed() && cm_text.empty() && model_path.empty())
      throw CLI::RequiredError("evaluate needs --cm or --model with --data");
    if (!cm_text.empty()) stored_cm = parse_cm(cm_text);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    Context ctx{g.config ? load_config(*g.config) : AppConfig{}, g.out, out, err};
    if (g.seed) ctx.config.seed = *g.seed;
    if (g.threads) ctx.config.threads = *g.threads;
    if (tr->parsed()) {
      if (algorithm) {
        try {
          ctx.config.train.algorithm = parse_algorithm(*algorithm);
        } catch (const std::exception&) {
          throw ConfigError("unknown algorithm '" + *algorithm + "'");
        }
      }
      if (iterations) ctx.config.train.run.max_iterations = *iterations;
      if (population) ctx.config.train.run.population = *population;
    }
    if (bench->parsed()) {
      if (!functions.empty()) {
        for (const auto& f : functions) {
          try {
            benchmark_function(f);
          } catch (const ContractViolation&) {
            throw ConfigError("unknown benchmark function '" + f + "'");
          }
        }
        ctx.config.bench.functions = functions;
      }
      if (dim) ctx.config.bench.dimension = *dim;
      if (seeds) ctx.config.bench.seeds = *seeds;
      if (iterations) ctx.config.bench.iterations = *iterations;
      if (population) ctx.config.bench.population = *population;
    }
    ctx.config.sync();
    fs::create_directories(ctx.out);

    if (seg->parsed()) return cmd_segment(ctx, inputs);
    if (feat->parsed()) return cmd_features(ctx, inputs);
    if (tr->parsed()) return cmd_train(ctx, data_dir, labels);
    if (pr->parsed()) return cmd_predict(ctx, model_path, inputs);
    if (ev->parsed()) {
      if (stored_cm) return cmd_evaluate(ctx, *stored_cm);
      return cmd_evaluate_model(ctx, model_path, data_dir, labels, which);
    }
    if (bench->parsed()) return cmd_bench(ctx);
    if (aug->parsed()) return cmd_augment(ctx, data_dir, labels);
    if (syn->parsed()) return cmd_synth(ctx, count);
    return exit_usage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_usage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const ContractViolation& e) {
    err << "contract violation: " << e.what() << '\n';
    return exit_contract;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_contract;
  }
}

}  // namespace ghho::app
