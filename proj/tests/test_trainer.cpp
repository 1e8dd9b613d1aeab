#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ghho/errors.hpp"
#include "ghho/synthetic.hpp"
#include "ghho/trainer.hpp"

using namespace ghho;

namespace {

NetworkSpec small_spec() {
  NetworkSpec s;
  s.input = {1, 31, 31};
  s.layers = {LayerSpec::conv(4, 5, 2), LayerSpec::relu_layer(), LayerSpec::maxpool(),
              LayerSpec::fully_connected(8, Activation::relu), LayerSpec::dropout(0.5),
              LayerSpec::fully_connected(2, Activation::identity), LayerSpec::softmax()};
  return s;
}

Dataset small_blobs(std::size_t n, std::uint64_t seed) {
  BlobOptions o;
  o.size = 31;
  o.blob_min = 6;
  o.blob_max = 12;
  Dataset d = synthetic_blobs(n, seed, o);
  assign_split(d, seed);
  prepare_dataset(d, {}, true);
  return d;
}

Eigen::VectorXd pv(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

// Logistic regression on the scaled features, plain batch gradient descent.
double logistic_baseline(const Dataset& d) {
  const auto tr = d.select(Split::train), te = d.select(Split::test);
  std::vector<FeatureVector> fs;
  for (auto* s : tr) fs.push_back(s->features);
  const auto sc = FeatureScaler::fit(fs);
  Eigen::Vector4d w = Eigen::Vector4d::Zero();
  const auto row = [&](const Sample* s) {
    const Eigen::VectorXd f = sc.apply(s->features);
    return Eigen::Vector4d(f[0], f[1], f[2], 1.0);
  };
  for (int it = 0; it < 2000; ++it) {
    Eigen::Vector4d g = Eigen::Vector4d::Zero();
    for (auto* s : tr) {
      const Eigen::Vector4d x = row(s);
      g += (1 / (1 + std::exp(-w.dot(x))) - s->label) * x;
    }
    w -= 0.5 * g / static_cast<double>(tr.size());
  }
  int ok = 0;
  for (auto* s : te) ok += ((w.dot(row(s)) > 0) == (s->label == 1));
  return static_cast<double>(ok) / te.size();
}

}  // namespace

TEST_CASE("split assignment") {
  Dataset a = synthetic_blobs(23, 1), b = synthetic_blobs(23, 1);
  assign_split(a, 5);
  assign_split(b, 5);
  CHECK(a.count(Split::train) == 16);
  CHECK(a.count(Split::test) == 7);
  for (std::size_t i = 0; i < a.items.size(); ++i) CHECK(a.items[i].split == b.items[i].split);
  assign_split(b, 6);
  bool differs = false;
  for (std::size_t i = 0; i < a.items.size(); ++i) differs = differs || a.items[i].split != b.items[i].split;
  CHECK(differs);
}

TEST_CASE("rmse") {
  const std::vector<Eigen::VectorXd> perfect{pv(0, 1), pv(1, 0)};
  const std::vector<int> labels{1, 0};
  CHECK(rmse(perfect, labels) == 0.0);
  const std::vector<Eigen::VectorXd> uniform{pv(0.5, 0.5), pv(0.5, 0.5)};
  CHECK(rmse(uniform, labels) == 0.5);
  CHECK_THROWS_AS(rmse({}, {}), ContractViolation);
}

TEST_CASE("rmse_fitness and the cached head agree with a residual oracle") {
  const NetworkSpec spec = small_spec();
  Dataset d = small_blobs(4, 3);
  std::vector<FeatureVector> fs;
  for (const auto& s : d.items) fs.push_back(s.features);
  const auto scaler = FeatureScaler::fit(fs);
  std::vector<Example> batch;
  for (const auto& s : d.items) batch.push_back(make_example(s, scaler));

  const Weights base = he_initialize(spec, 2);
  for (SliceMode mode : {SliceMode::head, SliceMode::head_and_hidden}) {
    const WeightSlice slice = search_slice(spec, mode);
    Rng rng(4);
    Eigen::VectorXd values(slice.length);
    for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = rng.uniform(-1, 1);

    Weights w = base;
    w.flat().segment(slice.offset, slice.length) = values;
    double sum = 0;
    for (const auto& e : batch) {
      const auto p = forward(spec, w, e.input, e.side).probabilities;
      sum += std::pow(p[0] - (e.label == 0), 2) + std::pow(p[1] - (e.label == 1), 2);
    }
    const double expect = std::sqrt(sum / (2.0 * batch.size()));
    CHECK(rmse_fitness(values, spec, base, slice, batch) == doctest::Approx(expect).epsilon(1e-12));
    const CachedHead head(spec, base, slice, batch);
    CHECK(head.rmse(values) == doctest::Approx(expect).epsilon(1e-12));
    const std::vector<std::size_t> sub{1, 3};
    const std::vector<Example> sub_batch{batch[1], batch[3]};
    CHECK(head.rmse(values, sub) == doctest::Approx(rmse_fitness(values, spec, base, slice, sub_batch)).epsilon(1e-12));
    CHECK_THROWS_AS(head.rmse(Eigen::VectorXd::Zero(3)), ContractViolation);
  }
  CHECK_THROWS_AS(rmse_fitness(Eigen::VectorXd::Zero(18), spec, base, search_slice(spec, SliceMode::head), {}),
                  ContractViolation);
}

TEST_CASE("metrics") {
  const Metrics t3 = metrics({1075, 10, 51, 929});
  CHECK(std::abs(*t3.accuracy - 0.9705) < 5e-5);
  CHECK(std::abs(*t3.precision - 0.9908) < 5e-5);
  CHECK(std::abs(*t3.recall - 0.9547) < 5e-5);
  CHECK(std::abs(*t3.f_measure - 0.9724) < 5e-5);

  const Metrics all = metrics({12, 0, 0, 0});
  CHECK(*all.accuracy == 1.0);
  CHECK(*all.precision == 1.0);
  CHECK(*all.recall == 1.0);
  CHECK(*all.f_measure == 1.0);

  const Metrics sym = metrics({1, 1, 1, 1});
  CHECK(*sym.accuracy == 0.5);
  CHECK(*sym.precision == 0.5);
  CHECK(*sym.recall == 0.5);
  CHECK(*sym.f_measure == 0.5);

  const Metrics none = metrics({});
  CHECK_FALSE(none.accuracy);
  CHECK_FALSE(none.precision);
  CHECK_FALSE(none.recall);
  CHECK_FALSE(none.f_measure);
}

TEST_CASE("confusion counting") {
  const std::vector<int> labels{1, 0, 1, 0, 1};
  std::vector<Eigen::VectorXd> perfect, inverted;
  for (int l : labels) {
    perfect.push_back(l ? pv(0.1, 0.9) : pv(0.8, 0.2));
    inverted.push_back(l ? pv(0.9, 0.1) : pv(0.2, 0.8));
  }
  const auto p = confusion(perfect, labels);
  CHECK(p.fp == 0);
  CHECK(p.fn == 0);
  const auto q = confusion(inverted, labels);
  CHECK(q.tp == 0);
  CHECK(q.tn == 0);
  CHECK(predicted_class(pv(0.5, 0.5)) == 0);

  Rng rng(5);
  std::vector<Eigen::VectorXd> probs;
  std::vector<int> ls;
  ConfusionMatrix tally;
  for (int i = 0; i < 40; ++i) {
    const double a = rng.uniform();
    probs.push_back(pv(a, 1 - a));
    ls.push_back(static_cast<int>(rng.next() % 2));
    const bool pos = 1 - a > a;
    if (pos && ls.back()) ++tally.tp;
    if (pos && !ls.back()) ++tally.fp;
    if (!pos && ls.back()) ++tally.fn;
    if (!pos && !ls.back()) ++tally.tn;
  }
  CHECK(confusion(probs, ls) == tally);
  CHECK(tally.total() == 40);
}

TEST_CASE("roc points") {
  const std::vector<double> scores{0.9, 0.8, 0.3, 0.2};
  const std::vector<int> labels{1, 1, 0, 0};
  const std::vector<double> th{0.0, 0.5, 1.5};
  const auto pts = roc_points(scores, labels, th);
  CHECK(pts[0].fpr == 1.0);
  CHECK(pts[0].tpr == 1.0);
  CHECK(pts[1].fpr == 0.0);
  CHECK(pts[1].tpr == 1.0);
  CHECK(pts[2].fpr == 0.0);
  CHECK(pts[2].tpr == 0.0);

  Rng rng(6);
  std::vector<double> s(60);
  std::vector<int> l(60);
  for (std::size_t i = 0; i < 60; ++i) {
    s[i] = rng.uniform();
    l[i] = static_cast<int>(rng.next() % 2);
  }
  std::vector<double> ths;
  for (int k = 0; k <= 10; ++k) ths.push_back(k / 10.0);
  const auto got = roc_points(s, l, ths);
  // sort scores descending, then count the prefix above each threshold
  std::vector<std::size_t> order(60);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] > s[b]; });
  const double P = std::count(l.begin(), l.end(), 1), N = 60 - P;
  for (std::size_t k = 0; k < ths.size(); ++k) {
    double tp = 0, fp = 0;
    for (auto i : order) {
      if (s[i] < ths[k]) break;
      (l[i] ? tp : fp) += 1;
    }
    CHECK(got[k].tpr == doctest::Approx(tp / P));
    CHECK(got[k].fpr == doctest::Approx(fp / N));
  }
}

TEST_CASE("train on a toy set") {
  const NetworkSpec spec = small_spec();
  Dataset d = small_blobs(60, 11);
  TrainConfig cfg;
  cfg.run.population = 10;
  cfg.run.max_iterations = 30;
  cfg.run.seed = 3;
  const auto a = train(d, spec, cfg);
  const auto b = train(d, spec, cfg);
  CHECK(a.classifier.weights.flat() == b.classifier.weights.flat());
  CHECK(a.report.curves.size() == 30);
  CHECK(a.report.final_batch_rmse <= a.report.initial_batch_rmse);
  CHECK(a.report.train_confusion.total() == d.count(Split::train));
  CHECK(a.report.test_confusion.total() == d.count(Split::test));
  CHECK(a.report.search_dimensions == 18);
  CHECK(evaluate(a.classifier, d.select(Split::test)) == a.report.test_confusion);
  // only the head slice moved
  const Weights base = he_initialize(spec, 3);
  const auto slice = search_slice(spec, SliceMode::head);
  CHECK(a.classifier.weights.flat().head(slice.offset) == base.flat().head(slice.offset));

  cfg.run.threads = 3;
  CHECK(train(d, spec, cfg).classifier.weights.flat() == a.classifier.weights.flat());
}

TEST_CASE("train with one item per class") {
  const NetworkSpec spec = small_spec();
  Dataset d = small_blobs(2, 4);
  for (auto& s : d.items) s.split = Split::train;
  TrainConfig cfg;
  cfg.run.population = 6;
  cfg.run.max_iterations = 10;
  const auto r = train(d, spec, cfg);
  CHECK(r.report.final_batch_rmse <= r.report.initial_batch_rmse);

  d.items.pop_back();
  CHECK_THROWS_AS(train(d, spec, cfg), ContractViolation);
}

TEST_CASE("synthetic blobs are separable by a linear baseline") {
  Dataset d = small_blobs(200, 21);
  CHECK(logistic_baseline(d) >= 0.9);
  TrainConfig cfg;
  cfg.run.population = 20;
  cfg.run.max_iterations = 60;
  const auto r = train(d, small_spec(), cfg);
  CHECK(*metrics(r.report.test_confusion).accuracy >= 0.9);
}

TEST_CASE("algorithm names") {
  for (auto a : {Algorithm::g_hho, Algorithm::hho, Algorithm::gwo}) CHECK(parse_algorithm(to_string(a)) == a);
  CHECK_THROWS(parse_algorithm("sgd"));
}
